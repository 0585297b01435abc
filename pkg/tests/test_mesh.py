"""Polar mesh layout and the precomputed cell tables."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adscmc._kernels import build_tables
from adscmc.errors import ConfigError
from adscmc.mesh import build_mesh


def test_node_counting():
    mesh = build_mesh(3, 8, 16)
    assert mesh.n_nodes == 8 * 16 + 1
    assert mesh.n_interior == 1 + 7 * 16
    assert mesh.boundary_mask().sum() == 16
    # the boundary occupies exactly the trailing id block
    assert np.array_equal(np.nonzero(mesh.boundary_mask())[0], np.arange(113, 129))


def test_parameter_validation():
    with pytest.raises(ConfigError):
        build_mesh(3, 4, 17)
    with pytest.raises(ConfigError):
        build_mesh(3, 8, 17)
    with pytest.raises(ConfigError):
        build_mesh(3, 8, 14)
    with pytest.raises(ConfigError):
        build_mesh(0.5, 8, 16)
    with pytest.raises(ConfigError):
        build_mesh(9.0, 8, 16)


def test_disk_coordinates_stay_inside_the_disk():
    mesh = build_mesh(3, 64, 128)
    z = mesh.disk_points()
    r = np.abs(z)
    assert r.max() < 1.0
    assert np.isclose(r.max(), np.tanh(1.5), atol=1e-14)
    assert round(float(r.max()), 4) == 0.9051


def test_ring_radii_are_uniform():
    mesh = build_mesh(2.0, 10, 20)
    s = mesh.radii()
    assert s[0] == 0.0
    assert np.isclose(s[1:21], 0.2).all()
    assert np.isclose(s[-1], 2.0)
    th = mesh.angles()
    assert np.allclose(th[1:21], np.arange(20) * np.pi / 10)
    assert np.allclose(mesh.boundary_angles(), np.arange(20) * np.pi / 10)


@given(st.integers(0, 12), st.integers(-40, 40))
def test_node_id_ring_roundtrip(ring, j):
    mesh = build_mesh(3, 12, 16)
    node = int(mesh.node_id(ring, j))
    assert int(mesh.ring_of(node)) == ring
    if ring > 0:
        assert node == 1 + (ring - 1) * 16 + j % 16


def test_mesh_is_hashable_and_frozen():
    a = build_mesh(3, 8, 16)
    b = build_mesh(3, 8, 16)
    assert a == b and hash(a) == hash(b)
    with pytest.raises(Exception):
        a.n_r = 9


# --- cell tables ---------------------------------------------------------


def test_cell_areas_tile_the_truncated_disk():
    # interior cells partition the disk of radius (n_r - 1/2) h_r; the exact
    # antiderivatives in the tables must telescope to its hyperbolic area
    mesh = build_mesh(3, 16, 32)
    g = build_tables(mesh)
    total = np.sum(1.0 / g.inv_area)
    s_edge = (mesh.n_r - 0.5) * mesh.h_r
    assert np.isclose(total, 2 * np.pi * (np.cosh(s_edge) - 1.0), rtol=1e-14)


def test_source_integrals_tile_the_chi_mass():
    # same telescoping for the integral of chi: d(sinh^2(s)/2) = chi dA / (2 pi)
    mesh = build_mesh(2.5, 12, 24)
    g = build_tables(mesh)
    s_edge = (mesh.n_r - 0.5) * mesh.h_r
    assert np.isclose(
        np.sum(g.srcint), np.pi * np.sinh(s_edge) ** 2, rtol=1e-14
    )


def test_conductances_positive_and_symmetric_in_theta():
    mesh = build_mesh(3, 8, 16)
    g = build_tables(mesh)
    assert (g.c_rad > 0).all()
    assert (g.c_ang[1:] > 0).all()
    assert (g.inv_area > 0).all()
    # chi = cosh s at the sample points
    assert np.allclose(g.chi_node, np.cosh(np.arange(mesh.n_r + 1) * mesh.h_r))
