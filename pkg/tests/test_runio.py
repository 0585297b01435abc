"""Serialization primitives: tables, digests, and the float round trip."""

import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adscmc import boundary, extension, geometry, runio
from adscmc.mesh import build_mesh
from adscmc.solver import boundary_values, solve


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_float_round_trips(x):
    assert float(runio.format_float(x)) == x


def test_format_float_is_shortest_repr():
    assert runio.format_float(0.1) == "0.1"
    assert runio.format_float(np.float64(1.0) / 3.0) == "0.3333333333333333"


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "# schema_version=1"
    names = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return names, rows


def test_write_csv_layout(tmp_path):
    path = tmp_path / "t.csv"
    runio.write_csv(path, ["id", "x"], [np.arange(3), np.array([0.5, 1.0, -2.25])])
    names, rows = read_csv(path)
    assert names == ["id", "x"]
    assert [r[0] for r in rows] == ["0", "1", "2"]
    assert [float(r[1]) for r in rows] == [0.5, 1.0, -2.25]
    assert not list(tmp_path.glob("*.tmp"))


def test_write_csv_rejects_ragged_columns(tmp_path):
    with pytest.raises(ValueError):
        runio.write_csv(tmp_path / "t.csv", ["a", "b"], [np.arange(3), np.arange(4)])


def test_write_csv_bytes_are_stable(tmp_path):
    cols = [np.arange(4), np.linspace(-1, 1, 4)]
    runio.write_csv(tmp_path / "a.csv", ["id", "x"], cols)
    runio.write_csv(tmp_path / "b.csv", ["id", "x"], cols)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_write_json_sorted_and_newline_terminated(tmp_path):
    path = tmp_path / "m.json"
    runio.write_json(path, {"b": 1, "a": [1.5, None]})
    text = path.read_text()
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [1.5, None], "b": 1}


def test_write_json_refuses_nan(tmp_path):
    with pytest.raises(ValueError):
        runio.write_json(tmp_path / "m.json", {"x": float("nan")})


def test_jsonable_scrubs_numpy_and_nonfinite():
    out = runio.jsonable(
        {
            "a": np.float64(1.5),
            "b": np.int32(7),
            "c": np.array([1.0, np.nan, np.inf]),
            "d": [np.bool_(True), float("-inf")],
        }
    )
    assert out == {"a": 1.5, "b": 7, "c": [1.0, None, None], "d": [True, None]}
    assert json.dumps(out, allow_nan=False)


def test_sha256_of_known_vector(tmp_path):
    path = tmp_path / "empty"
    path.write_bytes(b"")
    expect = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert runio.sha256_of(path) == expect


def test_artifact_entry_reports_size(tmp_path):
    path = tmp_path / "f.bin"
    path.write_bytes(b"xyz")
    entry = runio.artifact_entry(tmp_path, "f.bin")
    assert entry["file"] == "f.bin"
    assert entry["bytes"] == 3
    assert entry["sha256"] == runio.sha256_of(path)


@pytest.fixture(scope="module")
def small_leaf():
    mesh = build_mesh(2.0, 10, 20)
    gamma = boundary.make_quasicircle(boundary.trig_map(0.2, 2))
    sol = solve(mesh, boundary_values(gamma, mesh, H=0.5), 0.5)
    assert sol.converged
    forms = geometry.compute_forms(sol)
    return sol, forms, extension.build_extension(sol, forms)


SURFACE_NAMES = [
    "id", "z_re", "z_im", "u", "v", "lambda", "K",
    "mu_formula_re", "mu_formula_im", "mu_measured_re", "mu_measured_im",
    "pi_l_re", "pi_l_im", "pi_r_re", "pi_r_im",
]


def test_surface_table_schema(small_leaf):
    sol, forms, ext = small_leaf
    names, cols = runio.surface_table(sol, forms, ext)
    assert names == SURFACE_NAMES
    n = sol.mesh.n_interior
    assert all(len(c) == n for c in cols)
    assert list(cols[0]) == list(range(n))
    # disk coordinate of the center node is the origin
    assert cols[1][0] == 0.0 and cols[2][0] == 0.0
    z = np.asarray(cols[1]) + 1j * np.asarray(cols[2])
    assert np.max(np.abs(z)) < 1.0
    np.testing.assert_array_equal(np.asarray(cols[3]), sol.u[:n])


def test_foliation_table_schema(small_leaf):
    sol, _, _ = small_leaf
    mesh = sol.mesh
    names, cols = runio.foliation_table(mesh, [-0.5, 0.5], [sol.u, 2.0 * sol.u])
    assert names == ["id", "u_H=-0.5", "u_H=0.5"]
    assert all(len(c) == mesh.n_nodes for c in cols)
    np.testing.assert_array_equal(np.asarray(cols[2]), 2.0 * sol.u)
