"""Deterministic run artifacts: versioned CSV tables and hashed manifests.

Bytes are the contract here.  Every float is rendered with repr (shortest
round-trip form), rows follow mesh node order, JSON keys are sorted, and
files land via write-temp-then-rename so a partial write can never be
mistaken for a finished artifact.
"""

import hashlib
import json
import os
import tempfile

import numpy as np

SCHEMA_VERSION = 1


def format_float(x):
    """Shortest decimal that round-trips to the same binary64 value."""
    return repr(float(x))


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, names, columns):
    """Write one versioned CSV table; columns are equal-length 1-D arrays."""
    columns = [np.asarray(c) for c in columns]
    if len(names) != len(columns):
        raise ValueError("one name per column")
    n = columns[0].shape[0]
    if any(c.shape != (n,) for c in columns):
        raise ValueError("ragged columns")
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(names)]
    for i in range(n):
        row = []
        for c in columns:
            v = c[i]
            row.append(str(int(v)) if np.issubdtype(c.dtype, np.integer) else format_float(v))
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, obj):
    """Write a JSON document with sorted keys; NaN is not representable."""
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def jsonable(x):
    """Recursively convert numpy scalars/arrays; NaN and infinities to None."""
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    return x


def surface_table(sol, forms, ext):
    """Per-interior-node export table for one solved leaf."""
    mesh = sol.mesh
    m = mesh.n_interior
    s = mesh.radii()[:m]
    th = mesh.angles()[:m]
    z = np.tanh(s / 2.0) * np.exp(1j * th)
    names = [
        "id", "z_re", "z_im", "u", "v", "lambda", "K",
        "mu_formula_re", "mu_formula_im", "mu_measured_re", "mu_measured_im",
        "pi_l_re", "pi_l_im", "pi_r_re", "pi_r_im",
    ]
    cols = [
        np.arange(m), z.real, z.imag, sol.u[:m], sol.v[:m], forms.lam, forms.K,
        ext.mu_formula.real, ext.mu_formula.imag,
        ext.mu_measured.real, ext.mu_measured.imag,
        ext.pi_l.real, ext.pi_l.imag, ext.pi_r.real, ext.pi_r.imag,
    ]
    return names, cols


def foliation_table(mesh, H_values, u_columns):
    """All-node u matrix across the converged leaves of a sweep."""
    names = ["id"] + [f"u_H={format_float(H)}" for H in H_values]
    cols = [np.arange(mesh.n_nodes)] + [np.asarray(u) for u in u_columns]
    return names, cols


def artifact_entry(out_dir, filename):
    path = os.path.join(out_dir, filename)
    return {
        "file": filename,
        "sha256": sha256_of(path),
        "bytes": os.path.getsize(path),
    }
