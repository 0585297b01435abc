"""Quadric model: charts, matrix picture, rulings, isometries, causality."""

import numpy as np
import pytest
from hypothesis import given, assume, settings
from hypothesis import strategies as st

from adscmc import ads
from adscmc.errors import BadLift, InvalidDiskPoint, InvalidFrame, NotTimelikeRelated

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)
angles = st.floats(min_value=0.0, max_value=2.0 * np.pi, allow_nan=False)


def ang_close(a, b, tol=1e-8):
    """Angle equality mod 2 pi."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 2 * np.pi)
    return bool(np.all(np.minimum(d, 2 * np.pi - d) <= tol))


def random_isometry(rng):
    mats = []
    while len(mats) < 2:
        m = rng.uniform(-1.5, 1.5, size=(2, 2))
        if np.linalg.det(m) > 0.1:
            mats.append(m)
    return ads.Isometry(mats[0], mats[1])


@given(finite, finite, finite, finite)
def test_matrix_determinant_is_minus_norm(a, b, c, d):
    x = np.array([a, b, c, d])
    m = ads.to_matrix(x)
    assert np.isclose(np.linalg.det(m), -ads.inner(x, x), atol=1e-10)


@given(finite, finite, finite, finite)
def test_matrix_roundtrip(a, b, c, d):
    x = np.array([a, b, c, d])
    assert np.allclose(ads.from_matrix(ads.to_matrix(x)), x, atol=1e-12)


def test_chart_roundtrip():
    rng = np.random.default_rng(7)
    s = rng.uniform(0.01, 3.0, size=40)
    theta = rng.uniform(-np.pi, np.pi, size=40)
    t = rng.uniform(-1.4, 1.4, size=40)
    y = ads.graph_point(s, theta, t)
    assert np.all(ads.on_quadric(y, tol=1e-9))
    s2, theta2, t2 = ads.product_coordinates(y)
    assert np.allclose(s2, s, atol=1e-9)
    assert ang_close(theta2, theta, tol=1e-9)
    assert np.allclose(t2, t, atol=1e-9)


def test_disk_chart():
    z = 0.6 * np.exp(0.3j)
    s, theta = ads.disk_to_hyperbolic_polar(z)
    assert np.isclose(ads.hyperbolic_polar_to_disk(s, theta), z)
    # chi = cosh(s) in both charts
    assert np.isclose(ads.chi_of_disk(z), np.cosh(s))
    with pytest.raises(InvalidDiskPoint):
        ads.chi_of_disk(1.0 + 0j)


def test_geodesics_stay_on_quadric():
    p = ads.X_BASE
    w = np.array([0.0, np.cos(0.4), np.sin(0.4), 0.0])
    s = np.linspace(-2, 2, 17)
    assert np.all(ads.on_quadric(ads.spacelike_geodesic(p, w, s), tol=1e-12))
    assert np.all(ads.on_quadric(ads.timelike_geodesic(p, ads.NU_BASE, s), tol=1e-12))


def test_normalize_guards():
    with pytest.raises(InvalidFrame):
        ads.normalize_spacelike(np.array([1.0, 0.0, 0.0, 0.0]))
    with pytest.raises(InvalidFrame):
        ads.normalize_timelike(np.array([0.0, 1.0, 0.0, 0.0]))


# -- boundary rulings -------------------------------------------------------


@given(angles, angles)
def test_ruling_angles_invert_null_lift(theta_l, theta_r):
    y = ads.boundary_null_vector(theta_l, theta_r)
    assert np.isclose(ads.inner(y, y), 0.0, atol=1e-12)
    out_l, out_r = ads.ruling_angles(y)
    assert ang_close(out_l, theta_l, tol=1e-9)
    assert ang_close(out_r, theta_r, tol=1e-9)


def test_ruling_lines_fix_one_angle():
    # moving along a right-ruling line of the boundary torus changes theta_r
    # but keeps the row line, hence theta_l, frozen
    theta_l = 1.1
    lifts = ads.boundary_null_vector(theta_l, np.linspace(0, 5, 23))
    out_l, _ = ads.ruling_angles(lifts)
    assert ang_close(out_l, theta_l, tol=1e-9)


def test_ruling_angles_reject_non_null():
    with pytest.raises(InvalidFrame):
        ads.ruling_angles(ads.X_BASE)


def test_scale_and_sign_invariance_of_rulings():
    y = ads.boundary_null_vector(0.7, 2.9)
    l1, r1 = ads.ruling_angles(y)
    l2, r2 = ads.ruling_angles(-3.7 * y)
    assert ang_close(l1, l2, tol=1e-12)
    assert ang_close(r1, r2, tol=1e-12)


# -- isometries -------------------------------------------------------------


@settings(max_examples=30)
@given(st.integers(0, 10_000), finite, finite, finite, angles)
def test_isometry_preserves_inner_products(seed, a, b, c, t):
    g = random_isometry(np.random.default_rng(seed))
    x = ads.graph_point(abs(a) + 0.1, b, c % 1.4)
    y = ads.graph_point(abs(c) + 0.2, a, t % 1.4)
    gx, gy = g.apply(x), g.apply(y)
    assert np.isclose(ads.inner(gx, gy), ads.inner(x, y), atol=1e-9)
    assert np.all(ads.on_quadric(gx, tol=1e-9))


@settings(max_examples=30)
@given(st.integers(0, 10_000), angles, angles)
def test_isometry_boundary_action_matches_rulings(seed, theta_l, theta_r):
    g = random_isometry(np.random.default_rng(seed))
    y = ads.boundary_null_vector(theta_l, theta_r)
    out_l, out_r = ads.ruling_angles(g.apply(y))
    exp_l, exp_r = g.apply_boundary(theta_l, theta_r)
    assert ang_close(out_l, exp_l)
    assert ang_close(out_r, exp_r)


def test_isometry_compose_inverse():
    rng = np.random.default_rng(3)
    g = random_isometry(rng)
    h = random_isometry(rng)
    x = ads.graph_point(0.8, 0.3, 0.2)
    assert np.allclose(g.compose(h).apply(x), g.apply(h.apply(x)), atol=1e-12)
    assert np.allclose(g.inverse().apply(g.apply(x)), x, atol=1e-10)


def test_isometry_rejects_orientation_reversal():
    with pytest.raises(InvalidFrame):
        ads.Isometry(np.diag([1.0, -1.0]), np.eye(2))


def test_mobius_angle_rotation():
    phi = 0.9
    half = np.array(
        [[np.cos(phi / 2), -np.sin(phi / 2)], [np.sin(phi / 2), np.cos(phi / 2)]]
    )
    thetas = np.linspace(0, 2 * np.pi, 11, endpoint=False)
    out = ads.mobius_angle(half, thetas)
    assert ang_close(out, thetas + phi, tol=1e-12)


def test_tangent_plane_isometry_identity():
    g = ads.tangent_plane_isometry(ads.X_BASE, ads.NU_BASE)
    assert np.allclose(g.left, np.eye(2), atol=1e-12)
    assert np.allclose(g.right, np.eye(2), atol=1e-12)


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_tangent_plane_isometry_hits_adapted_pair(seed):
    g = random_isometry(np.random.default_rng(seed))
    x = g.apply(ads.X_BASE)
    nu = g.apply(ads.NU_BASE)
    h = ads.tangent_plane_isometry(x, nu)
    assert np.allclose(h.apply(ads.X_BASE), x, atol=1e-9)
    assert np.allclose(h.apply(ads.NU_BASE), nu, atol=1e-9)


def test_tangent_plane_isometry_rejects_bad_pairs():
    with pytest.raises(InvalidFrame):
        ads.tangent_plane_isometry(ads.X_BASE, np.array([0.0, 1.0, 0.0, 0.0]))
    with pytest.raises(InvalidFrame):
        ads.tangent_plane_isometry(ads.X_BASE, ads.X_BASE)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_matrix4_representation_agrees(seed):
    g = random_isometry(np.random.default_rng(seed))
    m4 = g.matrix4
    gram = m4.T @ np.diag(ads.METRIC_DIAG) @ m4
    assert np.allclose(gram, np.diag(ads.METRIC_DIAG), atol=1e-10)
    pts = ads.graph_point(
        np.random.default_rng(seed + 1).uniform(0, 2, 25),
        np.random.default_rng(seed + 2).uniform(0, 7, 25),
        np.random.default_rng(seed + 3).uniform(-1, 1, 25),
    )
    assert np.allclose(pts @ m4.T, g.apply(pts), atol=1e-9)


def test_dual_plane_fixtures():
    plane = ads.dual_plane(ads.X_BASE)  # {x0 = 0}
    pts = np.stack(
        [np.zeros(9), np.sinh(np.linspace(-1, 1, 9)), np.zeros(9), np.cosh(np.linspace(-1, 1, 9))],
        axis=-1,
    )
    assert np.all(plane.contains(pts))
    p0 = ads.dual_plane(ads.NU_BASE)  # {x3 = 0}, the plane t = 0
    assert np.all(p0.contains(ads.graph_point(np.linspace(0, 2, 7), 0.3, 0.0)))
    assert not p0.contains(ads.graph_point(1.0, 0.3, 0.2))
    # duality is an involution on the stored dual point
    assert np.allclose(ads.dual_plane(p0.dual).dual, ads.NU_BASE)
    with pytest.raises(InvalidFrame):
        ads.dual_plane(np.array([1.2, 0.0, 0.0, 0.0]))


# -- distances and causality ------------------------------------------------


def test_timelike_distance_against_quadrature():
    # flow 0.7 along the unit normal, then integrate the speed of the
    # connecting curve independently of the closed form
    rho = 0.7
    q = ads.timelike_geodesic(ads.X_BASE, ads.NU_BASE, np.array([rho]))[0]
    assert np.isclose(ads.timelike_distance(ads.X_BASE, q), rho, atol=1e-12)
    s = np.linspace(0.0, rho, 4001)
    path = ads.timelike_geodesic(ads.X_BASE, ads.NU_BASE, s)
    vel = np.gradient(path, s, axis=0)
    speed = np.sqrt(-ads.inner(vel, vel))
    length = np.trapezoid(speed, s)
    assert np.isclose(length, ads.timelike_distance(ads.X_BASE, q), atol=1e-6)


def test_timelike_distance_rejects_spacelike_pairs():
    far = ads.graph_point(2.0, 0.0, 0.0)
    with pytest.raises(NotTimelikeRelated):
        ads.timelike_distance(ads.X_BASE, far)


def test_domain_of_dependence_fixtures():
    alpha = np.linspace(0, 2 * np.pi, 257)
    lifts = ads.boundary_null_vector(alpha, alpha)  # boundary of the plane {x3 = 0}
    assert ads.in_domain_of_dependence(lifts, ads.X_BASE) is True
    assert ads.in_domain_of_dependence(lifts, ads.NU_BASE) is False
    tilted = np.array([np.cos(0.2), 0.0, 0.0, np.sin(0.2)])
    assert ads.in_domain_of_dependence(lifts, tilted) is True


def test_domain_of_dependence_rejects_flipped_lift():
    alpha = np.linspace(0, 2 * np.pi, 64)
    lifts = ads.boundary_null_vector(alpha, alpha)
    lifts[10] *= -1
    with pytest.raises(BadLift):
        ads.in_domain_of_dependence(lifts, ads.X_BASE)
