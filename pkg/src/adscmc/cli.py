"""Command line driver.

Four subcommands share one JSON config format: `solve` produces a single
surface table, `sweep` a foliation across an H grid, `validate` the
invariant battery report, and `export` bare CSV artifacts with their
digests on stdout.  Every omitted config field takes its default and the
manifest echoes the materialized config, so a run is reproducible from its
artifacts alone.  Outputs carry no timestamps; rerunning an identical
config yields byte-identical files.

Exit codes: 0 success, 1 unusable config, 2 a solve did not converge,
3 an invariant check failed.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import boundary, extension, geometry, runio, validate
from .errors import AdsError, ConfigError, LandslideUndefined, NotQuasiconformal
from .mesh import build_mesh
from .solver import EPS_SPACELIKE, TOL_NEWTON

DEFAULTS = {
    "boundary": {"family": "trig", "a": 0.2, "k": 2},
    "H_grid": [-0.5, 0.0, 0.5],
    "mesh": {"R_max": 3.0, "n_r": 64, "n_theta": 128},
    "tolerances": {"tol_newton": TOL_NEWTON, "tol_mono": 1e-8, "eps_sl": EPS_SPACELIKE},
    "seed": 2026,
    "output_dir": "out",
}


@dataclasses.dataclass
class ScenarioConfig:
    """One fully materialized run description plus its built boundary curve."""

    boundary: dict
    H_grid: tuple
    R_max: float
    n_r: int
    n_theta: int
    tol_newton: float
    tol_mono: float
    eps_sl: float
    seed: int
    output_dir: str
    gamma: object

    def echo(self):
        """The config as it will be recorded in the manifest."""
        return {
            "boundary": dict(self.boundary),
            "H_grid": list(self.H_grid),
            "mesh": {"R_max": self.R_max, "n_r": self.n_r, "n_theta": self.n_theta},
            "tolerances": {
                "tol_newton": self.tol_newton,
                "tol_mono": self.tol_mono,
                "eps_sl": self.eps_sl,
            },
            "seed": self.seed,
            "output_dir": self.output_dir,
        }


def _merge_section(raw, name):
    base = dict(DEFAULTS[name])
    given = raw.get(name, {})
    if not isinstance(given, dict):
        raise ConfigError(f"'{name}' must be a mapping")
    stray = set(given) - set(base)
    if stray:
        raise ConfigError(f"unknown keys in '{name}': {sorted(stray)}")
    base.update(given)
    return base


def _positive(block, key, kind=float):
    try:
        v = kind(block[key])
    except (TypeError, ValueError):
        raise ConfigError(f"'{key}' must be a number") from None
    if not np.isfinite(v) or v <= 0:
        raise ConfigError(f"'{key}' must be positive and finite, got {block[key]!r}")
    return v


def load_config(path):
    """Read a config file (or take every default) and build its gamma.

    Raises ConfigError for anything unusable: unreadable file, invalid
    JSON, unknown keys, a bad mesh, a non-grid H_grid, non-positive
    tolerances, or a boundary spec that does not define a circle map.
    """
    if path is None:
        raw = {}
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read {path}: {err}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path} is not valid JSON: {err}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    stray = set(raw) - set(DEFAULTS)
    if stray:
        raise ConfigError(f"unknown config keys: {sorted(stray)}")

    bnd = raw.get("boundary", DEFAULTS["boundary"])
    gamma_map = boundary.family_map(bnd)

    grid = raw.get("H_grid", DEFAULTS["H_grid"])
    try:
        H_grid = tuple(float(h) for h in grid)
    except (TypeError, ValueError):
        raise ConfigError("H_grid must be a list of numbers") from None
    if not H_grid:
        raise ConfigError("H_grid must not be empty")
    if not all(np.isfinite(H_grid)):
        raise ConfigError("H_grid entries must be finite")
    if max(abs(h) for h in H_grid) > 4.0:
        raise ConfigError("|H| > 4 outside the supported range")
    if len(H_grid) > 1 and any(b <= a for a, b in zip(H_grid, H_grid[1:])):
        raise ConfigError("H_grid must be strictly increasing")

    mesh = _merge_section(raw, "mesh")
    R_max = _positive(mesh, "R_max")
    for key in ("n_r", "n_theta"):
        if not isinstance(mesh[key], int) or isinstance(mesh[key], bool):
            raise ConfigError(f"'{key}' must be an integer")
    n_r, n_theta = mesh["n_r"], mesh["n_theta"]
    if n_r < 4:
        raise ConfigError(f"n_r must be at least 4, got {n_r}")
    if n_theta < 8 or n_theta % 2:
        raise ConfigError(f"n_theta must be even and at least 8, got {n_theta}")

    tols = _merge_section(raw, "tolerances")
    tol_newton = _positive(tols, "tol_newton")
    tol_mono = _positive(tols, "tol_mono")
    eps_sl = _positive(tols, "eps_sl")

    seed = raw.get("seed", DEFAULTS["seed"])
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    output_dir = raw.get("output_dir", DEFAULTS["output_dir"])
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir must be a nonempty string")

    try:
        gamma = boundary.make_quasicircle(gamma_map)
    except AdsError as err:
        raise ConfigError(f"boundary spec does not define a quasicircle: {err}") from None

    return ScenarioConfig(
        boundary=dict(bnd),
        H_grid=H_grid,
        R_max=R_max,
        n_r=n_r,
        n_theta=n_theta,
        tol_newton=tol_newton,
        tol_mono=tol_mono,
        eps_sl=eps_sl,
        seed=seed,
        output_dir=output_dir,
        gamma=gamma,
    )


def _say(quiet, msg):
    if not quiet:
        print(msg, file=sys.stderr)


def _leaf_summary(lf, forms=None, ext=None, filename=None):
    """Manifest record for one leaf, converged or not."""
    d = {"H": lf.H}
    if lf.sol is not None:
        d["residual_norm"] = lf.sol.residual_norm
        d["iterations"] = lf.sol.iterations
        d["spacelike_margin"] = lf.sol.spacelike_margin
    if lf.failure:
        d["failure"] = lf.failure
    if forms is not None:
        rep = geometry.principal_bounds_check(forms, lf.H)
        d["max_lambda"] = rep.max_lambda
        d["min_K"] = float(forms.K.min())
        try:
            dil = extension.max_dilatation(ext)
            d["sup_mu_formula"] = dil.sup_formula
            d["sup_mu_measured"] = dil.sup_measured
            d["K_dilatation"] = dil.K
        except NotQuasiconformal as err:
            d["sup_mu_formula"] = float(np.max(np.abs(ext.mu_formula)))
            d["K_dilatation"] = None
            d["failure"] = str(err)
        try:
            theta, hopf = extension.landslide_angle(forms, lf.H)
            d["theta_est"] = theta
            d["theta_dev"] = hopf.theta_dev
        except LandslideUndefined:
            d["theta_est"] = None
            d["theta_dev"] = None
    if filename is not None:
        d["file"] = filename
    return d


def _invariant_rows(graded):
    """Quick per-run invariant table from the already-built leaf pipelines."""
    rows = []
    if not graded:
        return rows
    margin = min(lf.sol.spacelike_margin for lf, _, _ in graded)
    rows.append({"name": "spacelike_margin", "passed": margin > 0.0, "value": margin})
    gauss = max(
        float(np.max(np.abs(f.K + 1.0 + np.linalg.det(f.B)))) for _, f, _ in graded
    )
    rows.append({"name": "gauss_identity", "passed": gauss <= 1e-10, "value": gauss})
    worst = -np.inf
    clean = True
    for lf, f, _ in graded:
        rep = geometry.principal_bounds_check(f, lf.H)
        clean = clean and len(rep.violations) == 0 and rep.margin > 0.0
        worst = max(worst, rep.max_lambda - np.sqrt(1.0 + lf.H**2))
    rows.append({"name": "curvature_bound", "passed": clean, "value": worst})
    sup = max(float(np.max(np.abs(e.mu_formula))) for _, _, e in graded)
    rows.append({"name": "dilatation_bound", "passed": sup < 1.0, "value": sup})
    return rows


def _grade(lf):
    forms = geometry.compute_forms(lf.sol)
    return lf, forms, extension.build_extension(lf.sol, forms)


def _write_manifest(cfg, command, leaves, invariants, filenames, all_converged, extra=None):
    manifest = {
        "schema_version": runio.SCHEMA_VERSION,
        "command": command,
        "config": cfg.echo(),
        "leaves": leaves,
        "invariants": invariants,
        "all_converged": all_converged,
        "artifacts": [runio.artifact_entry(cfg.output_dir, f) for f in filenames],
    }
    if extra:
        manifest.update(extra)
    runio.write_json(
        os.path.join(cfg.output_dir, "manifest.json"), runio.jsonable(manifest)
    )
    return manifest


def cmd_solve(cfg, quiet=False):
    if len(cfg.H_grid) != 1:
        raise ConfigError("solve expects exactly one H_grid entry; use sweep for grids")
    mesh = build_mesh(cfg.R_max, cfg.n_r, cfg.n_theta)
    _say(quiet, f"solving H = {cfg.H_grid[0]:g} on {cfg.n_r}x{cfg.n_theta}")
    (lf,) = validate.drive_leaves(
        mesh, cfg.gamma, cfg.H_grid, tol=cfg.tol_newton, eps_sl=cfg.eps_sl
    )
    if lf.failure:
        _write_manifest(cfg, "solve", [_leaf_summary(lf)], [], [], False)
        _say(quiet, f"solve failed: {lf.failure}")
        return 2
    try:
        lf, forms, ext = _grade(lf)
    except AdsError as err:
        summary = _leaf_summary(lf)
        summary["failure"] = f"grading: {err}"
        _write_manifest(cfg, "solve", [summary], [], [], True)
        _say(quiet, f"converged but ungradable: {err}")
        return 3
    names, cols = runio.surface_table(lf.sol, forms, ext)
    runio.write_csv(os.path.join(cfg.output_dir, "surface.csv"), names, cols)
    _write_manifest(
        cfg,
        "solve",
        [_leaf_summary(lf, forms, ext, "surface.csv")],
        _invariant_rows([(lf, forms, ext)]),
        ["surface.csv"],
        True,
    )
    _say(quiet, f"wrote surface.csv ({lf.sol.iterations} iterations)")
    return 0


def _sweep_outputs(cfg, leaves, quiet):
    """Write per-leaf tables plus the foliation matrix; returns manifest parts.

    A converged leaf whose geometry cannot be graded (a folded projection,
    say) keeps its foliation column but gets no surface table; the failure
    lands in its summary.
    """
    summaries = []
    graded = []
    filenames = []
    n_ungradable = 0
    for i, lf in enumerate(leaves):
        if lf.failure:
            summaries.append(_leaf_summary(lf))
            _say(quiet, f"H = {lf.H:g}: FAILED ({lf.failure})")
            continue
        try:
            lf, forms, ext = _grade(lf)
        except AdsError as err:
            summary = _leaf_summary(lf)
            summary["failure"] = f"grading: {err}"
            summaries.append(summary)
            n_ungradable += 1
            _say(quiet, f"H = {lf.H:g}: converged but ungradable ({err})")
            continue
        fname = f"surface_{i:02d}.csv"
        names, cols = runio.surface_table(lf.sol, forms, ext)
        runio.write_csv(os.path.join(cfg.output_dir, fname), names, cols)
        summaries.append(_leaf_summary(lf, forms, ext, fname))
        graded.append((lf, forms, ext))
        filenames.append(fname)
        _say(quiet, f"H = {lf.H:g}: converged, wrote {fname}")
    ok = [lf for lf in leaves if not lf.failure]
    if ok:
        names, cols = runio.foliation_table(
            ok[0].sol.mesh, [lf.H for lf in ok], [lf.sol.u for lf in ok]
        )
        runio.write_csv(os.path.join(cfg.output_dir, "foliation.csv"), names, cols)
        filenames.append("foliation.csv")
    return summaries, graded, filenames, ok, n_ungradable


def cmd_sweep(cfg, quiet=False):
    if len(cfg.H_grid) < 2:
        raise ConfigError("sweep expects at least two H_grid entries")
    mesh = build_mesh(cfg.R_max, cfg.n_r, cfg.n_theta)
    _say(quiet, f"sweeping {len(cfg.H_grid)} leaves on {cfg.n_r}x{cfg.n_theta}")
    leaves = validate.drive_leaves(
        mesh, cfg.gamma, cfg.H_grid, tol=cfg.tol_newton, eps_sl=cfg.eps_sl
    )
    summaries, graded, filenames, ok, n_ungradable = _sweep_outputs(cfg, leaves, quiet)

    # leaves of a foliation decrease pointwise in H; grade consecutive
    # converged pairs so a failed leaf cannot hide a violation next to it
    gap = 0.0
    pairs = []
    for a, b in zip(ok[:-1], ok[1:]):
        gap = max(gap, float(np.max(b.sol.u - a.sol.u)))
        pairs.append([a.H, b.H])
    mono = {
        "pairs": pairs,
        "worst_gap": gap,
        "tol_mono": cfg.tol_mono,
        "passed": bool(gap <= cfg.tol_mono) if pairs else True,
    }

    invariants = _invariant_rows(graded)
    invariants.append(
        {"name": "foliation_monotone", "passed": mono["passed"], "value": gap}
    )
    all_converged = not any(lf.failure for lf in leaves)
    _write_manifest(
        cfg, "sweep", summaries, invariants, filenames, all_converged,
        {"monotonicity": mono},
    )
    if not all_converged:
        _say(quiet, "sweep incomplete; partial outputs retained")
        return 2
    if n_ungradable or not all(row["passed"] for row in invariants):
        _say(quiet, "sweep converged but an invariant failed")
        return 3
    _say(quiet, "sweep complete")
    return 0


def cmd_validate(cfg, quiet=False):
    _say(quiet, f"running invariant battery on {len(cfg.H_grid)} leaves")
    report = validate.run_battery(cfg)
    report["config"] = cfg.echo()
    runio.write_json(
        os.path.join(cfg.output_dir, "validation.json"), runio.jsonable(report)
    )
    for chk in report["checks"]:
        _say(quiet, f"{'pass' if chk['passed'] else 'FAIL'}: {chk['name']}")
    return 0 if report["all_passed"] else 3


def cmd_export(cfg, quiet=False):
    """CSV artifacts only, digests on stdout, no manifest."""
    mesh = build_mesh(cfg.R_max, cfg.n_r, cfg.n_theta)
    leaves = validate.drive_leaves(
        mesh, cfg.gamma, cfg.H_grid, tol=cfg.tol_newton, eps_sl=cfg.eps_sl
    )
    filenames = []
    n_ungradable = 0
    if len(leaves) == 1:
        head = leaves[0]
        if not head.failure:
            try:
                head, forms, ext = _grade(head)
                names, cols = runio.surface_table(head.sol, forms, ext)
                runio.write_csv(os.path.join(cfg.output_dir, "surface.csv"), names, cols)
                filenames = ["surface.csv"]
            except AdsError as err:
                n_ungradable = 1
                _say(quiet, f"converged but ungradable: {err}")
    else:
        _, _, filenames, _, n_ungradable = _sweep_outputs(cfg, leaves, quiet=True)
    for fname in filenames:
        entry = runio.artifact_entry(cfg.output_dir, fname)
        print(f"{entry['sha256']}  {fname}")
    if any(lf.failure for lf in leaves):
        return 2
    return 3 if n_ungradable else 0


_COMMANDS = {
    "solve": (cmd_solve, "solve one leaf and export its surface table"),
    "sweep": (cmd_sweep, "solve an H grid and export the foliation"),
    "validate": (cmd_validate, "grade the invariant battery"),
    "export": (cmd_export, "write CSV artifacts and print their digests"),
}


class _Parser(argparse.ArgumentParser):
    # bad flags are config errors (exit 1), not argparse's default exit 2
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    shared = _Parser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="JSON config; defaults apply")
    shared.add_argument("--out", metavar="DIR", help="output directory override")
    shared.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser = _Parser(prog="adscmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (fn, blurb) in _COMMANDS.items():
        sp = sub.add_parser(name, parents=[shared], help=blurb, description=blurb)
        sp.set_defaults(func=fn)
    return parser


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
        cfg = load_config(args.config)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, output_dir=args.out)
        if args.command == "solve" and len(cfg.H_grid) != 1:
            raise ConfigError("solve expects exactly one H_grid entry")
        if args.command == "sweep" and len(cfg.H_grid) < 2:
            raise ConfigError("sweep expects at least two H_grid entries")
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    os.makedirs(cfg.output_dir, exist_ok=True)
    try:
        return args.func(cfg, quiet=args.quiet)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except AdsError as err:
        print(f"invariant failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
