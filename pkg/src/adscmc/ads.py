"""Quadric model of anti-de Sitter 3-space.

The ambient space is R^{2,2} with the bilinear form

    <x, y> = -x0 y0 + x1 y1 + x2 y2 - x3 y3,

and the space itself is the quadric {<x, x> = -1}.  A second picture identifies
x with the 2x2 matrix

    M(x) = [[x0 + x1, x2 + x3],
            [x2 - x3, x0 - x1]],

so det M(x) = -<x, x> and the quadric becomes SL(2, R).  Orientation-preserving
isometries act by M |-> A M B^T with (A, B) in SL(2,R) x SL(2,R); rank-one
matrices u v^T represent boundary points, with the column line u carried by A
and the row line v carried by B.

Everything here is plain numpy on arrays whose last axis (or last two axes for
matrices) carries the R^{2,2} data; leading axes broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadLift, InvalidDiskPoint, InvalidFrame, NotInChart, NotTimelikeRelated

# Diagonal of the ambient bilinear form, signature (-, +, +, -).
METRIC_DIAG = np.array([-1.0, 1.0, 1.0, -1.0])

# Base point and its future unit normal: the "vertical" axis through the
# totally geodesic plane P0 = {x3 = 0}.
X_BASE = np.array([1.0, 0.0, 0.0, 0.0])
NU_BASE = np.array([0.0, 0.0, 0.0, 1.0])


def inner(a, b):
    """Ambient bilinear form <a, b>, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (a * METRIC_DIAG * b).sum(axis=-1)


def on_quadric(x, tol=1e-10):
    """True where <x, x> = -1 within tol."""
    return np.abs(inner(x, x) + 1.0) <= tol


def normalize_spacelike(w):
    """Scale w so that <w, w> = 1.  w must be spacelike."""
    w = np.asarray(w, dtype=float)
    n2 = inner(w, w)
    if np.any(n2 <= 0):
        raise InvalidFrame("vector is not spacelike")
    return w / np.sqrt(n2)[..., None]


def normalize_timelike(w):
    """Scale w so that <w, w> = -1.  w must be timelike."""
    w = np.asarray(w, dtype=float)
    n2 = inner(w, w)
    if np.any(n2 >= 0):
        raise InvalidFrame("vector is not timelike")
    return w / np.sqrt(-n2)[..., None]


# ---------------------------------------------------------------------------
# charts


def disk_to_hyperbolic_polar(z):
    """Poincare disk point -> (s, theta): hyperbolic radius and angle.

    |z| = tanh(s / 2).  Raises InvalidDiskPoint outside the open disk.
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    if np.any(r >= 1.0):
        raise InvalidDiskPoint("point on or outside the unit circle")
    s = 2.0 * np.arctanh(r)
    theta = np.angle(z)
    return s, theta


def hyperbolic_polar_to_disk(s, theta):
    """(s, theta) -> Poincare disk point tanh(s/2) e^{i theta}."""
    s = np.asarray(s, dtype=float)
    return np.tanh(s / 2.0) * np.exp(1j * np.asarray(theta, dtype=float))


def chi_of_disk(z):
    """Lapse chi = cosh(s) = (1 + |z|^2) / (1 - |z|^2) at a disk point."""
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    if np.any(r2 >= 1.0):
        raise InvalidDiskPoint("point on or outside the unit circle")
    return (1.0 + r2) / (1.0 - r2)


def hyperboloid_point(s, theta):
    """Point (cosh s, sinh s cos theta, sinh s sin theta) on the H^2 sheet."""
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sh = np.sinh(s)
    return np.stack([np.cosh(s), sh * np.cos(theta), sh * np.sin(theta)], axis=-1)


def graph_point(s, theta, t):
    """Quadric point over base (s, theta) at time t in the product chart.

    The static chart wraps the H^2 sheet (x0, x1, x2) around the time circle:
    y = (x0 cos t, x1, x2, x0 sin t).
    """
    x = hyperboloid_point(s, theta)
    t = np.asarray(t, dtype=float)
    return np.stack(
        [x[..., 0] * np.cos(t), x[..., 1], x[..., 2], x[..., 0] * np.sin(t)],
        axis=-1,
    )


def product_coordinates(y):
    """Inverse of graph_point: quadric point -> (s, theta, t).

    Only covers the region x0 > 0 in the static chart, i.e. hypot(y0, y3) > 0;
    elsewhere raises NotInChart.
    """
    y = np.asarray(y, dtype=float)
    x0 = np.hypot(y[..., 0], y[..., 3])
    if np.any(x0 < 1e-14):
        raise NotInChart("point lies on the axis of the static chart")
    t = np.arctan2(y[..., 3], y[..., 0])
    s = np.arccosh(np.maximum(x0, 1.0))
    theta = np.arctan2(y[..., 2], y[..., 1])
    return s, theta, t


def future_time_direction(y):
    """Unit future timelike vector tangent to the time circle at y."""
    y = np.asarray(y, dtype=float)
    v = np.stack(
        [-y[..., 3], np.zeros_like(y[..., 0]), np.zeros_like(y[..., 0]), y[..., 0]],
        axis=-1,
    )
    return normalize_timelike(v)


# ---------------------------------------------------------------------------
# matrix picture


def to_matrix(x):
    """M(x): last axis of length 4 -> trailing 2x2 matrix."""
    x = np.asarray(x, dtype=float)
    row0 = np.stack([x[..., 0] + x[..., 1], x[..., 2] + x[..., 3]], axis=-1)
    row1 = np.stack([x[..., 2] - x[..., 3], x[..., 0] - x[..., 1]], axis=-1)
    return np.stack([row0, row1], axis=-2)


def from_matrix(m):
    """Inverse of to_matrix."""
    m = np.asarray(m, dtype=float)
    return np.stack(
        [
            (m[..., 0, 0] + m[..., 1, 1]) / 2.0,
            (m[..., 0, 0] - m[..., 1, 1]) / 2.0,
            (m[..., 0, 1] + m[..., 1, 0]) / 2.0,
            (m[..., 0, 1] - m[..., 1, 0]) / 2.0,
        ],
        axis=-1,
    )


def _adjugate(m):
    m = np.asarray(m, dtype=float)
    return np.stack(
        [
            np.stack([m[..., 1, 1], -m[..., 0, 1]], axis=-1),
            np.stack([-m[..., 1, 0], m[..., 0, 0]], axis=-1),
        ],
        axis=-2,
    )


def _angle_mod_2pi(a):
    return np.mod(a, 2.0 * np.pi)


def mobius_angle(mat, theta):
    """Action of mat in SL(2,R) on a boundary angle.

    A boundary angle theta labels the line R (cos(theta/2), sin(theta/2)) in
    R^2; mat maps lines to lines, and doubling the rotated direction angle is
    well defined mod 2 pi.
    """
    theta = np.asarray(theta, dtype=float)
    d = np.stack([np.cos(theta / 2.0), np.sin(theta / 2.0)], axis=-1)
    w = np.einsum("ij,...j->...i", np.asarray(mat, dtype=float), d)
    return _angle_mod_2pi(2.0 * np.arctan2(w[..., 1], w[..., 0]))


def boundary_null_vector(theta_l, theta_r):
    """Canonical null lift of the boundary point with ruling angles (theta_l, theta_r).

    With alpha = (theta_l + theta_r)/2 and tau = (theta_l - theta_r)/2 the lift
    is (cos tau, cos alpha, sin alpha, sin tau); its matrix is rank one with
    row-line angle theta_l and column-line angle theta_r.
    """
    theta_l = np.asarray(theta_l, dtype=float)
    theta_r = np.asarray(theta_r, dtype=float)
    alpha = (theta_l + theta_r) / 2.0
    tau = (theta_l - theta_r) / 2.0
    return np.stack([np.cos(tau), np.cos(alpha), np.sin(alpha), np.sin(tau)], axis=-1)


def ruling_angles(y):
    """Ruling angles (theta_l, theta_r) of a null vector y.

    M(y) has rank one; theta_r doubles the direction of its column line,
    theta_l that of its row line.  Angles are reported in [0, 2 pi) and are
    independent of the scale and sign of y.
    """
    m = to_matrix(y)
    if np.any(np.abs(np.linalg.det(m)) > 1e-9 * np.maximum(1.0, (m ** 2).sum(axis=(-1, -2)))):
        raise InvalidFrame("vector is not null")
    # pick the larger column / row so the direction is well conditioned
    col_norms = (m ** 2).sum(axis=-2)
    u = np.where((col_norms[..., 0] >= col_norms[..., 1])[..., None], m[..., :, 0], m[..., :, 1])
    row_norms = (m ** 2).sum(axis=-1)
    v = np.where((row_norms[..., 0] >= row_norms[..., 1])[..., None], m[..., 0, :], m[..., 1, :])
    theta_r = _angle_mod_2pi(2.0 * np.arctan2(u[..., 1], u[..., 0]))
    theta_l = _angle_mod_2pi(2.0 * np.arctan2(v[..., 1], v[..., 0]))
    return theta_l, theta_r


@dataclass(frozen=True)
class SpacelikePlane:
    """Totally geodesic spacelike plane, stored as its dual quadric point.

    The plane is the set {x on the quadric : <x, dual> = 0}; duality is an
    involution, so the dual of the plane is the stored point again.
    """

    dual: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.dual, dtype=float)
        if p.shape != (4,) or not on_quadric(p, tol=1e-10):
            raise InvalidFrame("dual point must lie on the quadric")
        object.__setattr__(self, "dual", p)

    def contains(self, x, tol=1e-10):
        return np.abs(inner(x, self.dual)) <= tol


def dual_plane(p):
    """Spacelike plane dual to the quadric point p."""
    return SpacelikePlane(p)


@dataclass(frozen=True)
class Isometry:
    """Orientation-preserving isometry, stored as the SL(2,R) pair (left, right).

    The action on quadric points is M(x) |-> right @ M(x) @ left.T, so `left`
    drives the row lines (left ruling angles on the boundary) and `right` the
    column lines (right ruling angles).
    """

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        for name in ("left", "right"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (2, 2) or not np.all(np.isfinite(m)):
                raise InvalidFrame(f"{name} factor must be a finite 2x2 matrix")
            d = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            if d <= 0:
                raise InvalidFrame(f"{name} factor must have positive determinant")
            object.__setattr__(self, name, m / np.sqrt(d))

    @classmethod
    def identity(cls):
        return cls(np.eye(2), np.eye(2))

    def apply(self, x):
        """Act on quadric (or null) vectors; broadcasts over leading axes."""
        m = to_matrix(x)
        out = np.einsum("ij,...jk,lk->...il", self.right, m, self.left)
        return from_matrix(out)

    def apply_boundary(self, theta_l, theta_r):
        """Act on boundary ruling angles componentwise."""
        return mobius_angle(self.left, theta_l), mobius_angle(self.right, theta_r)

    def compose(self, other):
        """self after other."""
        return Isometry(self.left @ other.left, self.right @ other.right)

    def inverse(self):
        return Isometry(_adjugate(self.left), _adjugate(self.right))

    @property
    def matrix4(self):
        """The induced 4x4 linear map on R^{2,2} (preserves the bilinear form)."""
        return np.stack([self.apply(e) for e in np.eye(4)], axis=-1)


def tangent_plane_isometry(x, nu):
    """Isometry taking (X_BASE, NU_BASE) to the adapted pair (x, nu).

    Requires <x,x> = -1, <nu,nu> = -1, <x,nu> = 0.  The pair (x, nu) determines
    the tangent plane of a spacelike surface through x with future normal nu;
    the returned isometry is the canonical one modulo the rotation stabilizer,
    fixed by sending the first basis vector of R^2 to a unit vector.
    """
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if abs(inner(x, x) + 1.0) > 1e-8 or abs(inner(nu, nu) + 1.0) > 1e-8:
        raise InvalidFrame("x and nu must be unit (timelike-normalized) vectors")
    if abs(inner(x, nu)) > 1e-8:
        raise InvalidFrame("nu must be orthogonal to x")
    xm = to_matrix(x)
    nm = to_matrix(nu)
    # P = M(nu) M(x)^{-1} squares to -E because <x,nu>=0 and both are unit.
    p = nm @ _adjugate(xm)
    # Build A with A W A^{-1} = P, W = [[0,1],[-1,0]]: columns (a, -P a).
    best = None
    for a1 in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        a2 = -p @ a1
        det = a1[0] * a2[1] - a1[1] * a2[0]
        if best is None or abs(det) > abs(best[2]):
            best = (a1, a2, det)
    a1, a2, det = best
    if det <= 0:
        raise InvalidFrame("adapted pair is incompatible with the orientation")
    amat = np.stack([a1, a2], axis=-1) / np.sqrt(det)
    bmat = (np.linalg.solve(amat, xm)).T
    return Isometry(bmat, amat)


# ---------------------------------------------------------------------------
# planes, distances, domains of dependence


def timelike_distance(p, q):
    """Length of the timelike geodesic between quadric points p and q.

    Defined as arccos(-<p, q>) for |<p, q>| <= 1; otherwise the points are not
    timelike related (within one period) and NotTimelikeRelated is raised.
    """
    ip = inner(p, q)
    if np.any(np.abs(ip) > 1.0 + 1e-12):
        raise NotTimelikeRelated(f"<p, q> = {np.max(np.abs(ip)):.6f} lies outside [-1, 1]")
    return np.arccos(np.clip(-ip, -1.0, 1.0))


def spacelike_geodesic(p, w, s):
    """Unit-speed spacelike geodesic from p with initial direction w."""
    w = normalize_spacelike(w)
    s = np.asarray(s, dtype=float)[..., None]
    return np.cosh(s) * p + np.sinh(s) * w


def timelike_geodesic(p, w, s):
    """Unit-speed timelike geodesic from p with initial direction w."""
    w = normalize_timelike(w)
    s = np.asarray(s, dtype=float)[..., None]
    return np.cos(s) * p + np.sin(s) * w


def in_domain_of_dependence(lifts, p, tol=1e-9):
    """Whether the point dual to the plane {<y, p> = 0} sees the curve `lifts`.

    `lifts` is an (n, 4) array sampling a continuous lift of a boundary curve:
    consecutive samples must have positive Euclidean dot product, otherwise the
    lift flips sign somewhere and BadLift is raised.  The dual point p (with
    <p, p> = -1) lies in the domain of dependence exactly when <lift, p> never
    vanishes, hence never changes sign along the connected lift.
    """
    lifts = np.asarray(lifts, dtype=float)
    if lifts.ndim != 2 or lifts.shape[0] < 2:
        raise BadLift("need at least two samples of the lift")
    steps = (lifts[:-1] * lifts[1:]).sum(axis=1)
    if np.any(steps <= 0):
        raise BadLift("consecutive lift samples are not coherently oriented")
    dots = inner(lifts, np.asarray(p, dtype=float))
    if np.min(np.abs(dots)) <= tol:
        return False
    return bool(np.all(dots > 0) or np.all(dots < 0))
