"""Ruling projections of a spacelike surface and the induced disk map.

Every interior node carries a unique isometry g moving the base frame to
its (point, normal) pair.  Reading off the two SL(2) factors of g gives the
left and right projections onto the reference plane; together they sample
the extension map pi_l -> pi_r whose Beltrami coefficient the shape
operator controls through mu = -lambda (H + i) / (1 + H^2).
"""

from dataclasses import dataclass

import numpy as np

from . import ads, geometry
from .errors import (
    ConfigError,
    LandslideUndefined,
    NotQuasiconformal,
    ProjectionFold,
)
from .geometry import LAMBDA_MIN

# sup|mu| closer to 1 than this flags the dilatation report
NEAR_DEGENERATE_MARGIN = 1e-3

_EYE2 = np.eye(2)


@dataclass
class ExtensionField:
    """Projection images and Beltrami data, one entry per interior node.

    mu_formula is the closed-form coefficient from (lambda, H); mu_measured
    is the least-squares fit of the discrete left projection in the node's
    conformal chart, NaN at the center, ring 1, and the last interior ring
    where the polar stencil cannot support the fit.  K_local is the
    pointwise dilatation of mu_formula, +inf wherever |mu| reaches 1.
    `checked` holds the node ids whose forms the estimator resolves; the
    global dilatation constants run over exactly this set so they stay
    algebraically tied to the curvature-bound scan.
    """

    mesh: object
    H: float
    pi_l: np.ndarray
    pi_r: np.ndarray
    mu_formula: np.ndarray
    mu_measured: np.ndarray
    K_local: np.ndarray
    checked: np.ndarray

    @property
    def n_nodes(self):
        return self.pi_l.shape[0]


@dataclass
class HopfField:
    """Per-node Hopf values of the two projections and the angle estimate.

    hopf_l / hopf_r has constant argument 2 theta and unit modulus wherever
    the traceless shape operator is nonzero; `used` marks the nodes that
    entered the circular average.
    """

    hopf_l: np.ndarray
    hopf_r: np.ndarray
    theta_est: float
    theta_dev: float
    used: np.ndarray


@dataclass
class DilatationReport:
    """Quasi-conformality constants K = (1 + sup|mu|) / (1 - sup|mu|)."""

    K: float
    K_measured: float
    sup_formula: float
    sup_measured: float
    near_degenerate: bool


def _disk_point(y):
    """Poincare-disk coordinate of points on the reference plane."""
    return (y[..., 1] + 1j * y[..., 2]) / (1.0 + y[..., 0])


def dilatation_formula(lam, H):
    """Beltrami coefficient of the left projection, -lam (H + i) / (1 + H^2).

    Its squared modulus is lam^2 / (1 + H^2), below 1 exactly when the
    principal curvature bound lam < sqrt(1 + H^2) holds.
    """
    return -np.asarray(lam) * (H + 1j) / (1.0 + H * H)


def tangent_plane_ruling(x, nu):
    """Isometry carrying the base frame to (x, nu), as an SL(2) pair.

    The pair (left, right) encodes the two ruling families of the tangent
    plane at x: each factor acts on one boundary angle.  Raises InvalidFrame
    unless x and nu are unit, orthogonal, and nu is future timelike.
    """
    return ads.tangent_plane_isometry(x, nu)


def project_lr(x, nu):
    """Left and right projection images of x, as disk coordinates.

    With g = (A, B) the ruling pair of the tangent plane, the projections
    are (A, A) g^{-1} and (B, B) g^{-1}; evaluated at x itself they reduce
    to the plane points A A^T and B B^T in the symmetric-matrix picture.
    """
    g = tangent_plane_ruling(x, nu)
    zl = _disk_point(ads.from_matrix(g.left @ g.left.T))
    zr = _disk_point(ads.from_matrix(g.right @ g.right.T))
    return zl, zr


def _surface_frames(sol):
    """Node positions and future unit normals, same stencil as the forms."""
    mesh = sol.mesh
    pts = ads.graph_point(mesh.radii(), mesh.angles(), sol.u)
    n_r, n_t = mesh.n_r, mesh.n_theta
    rings = pts[1:].reshape(n_r, n_t, 4)
    inner = rings[: n_r - 1]
    up = rings[1:n_r]
    down = np.empty_like(inner)
    down[0] = pts[0]
    down[1:] = rings[: n_r - 2]
    x = inner.reshape(-1, 4)
    T1 = (up - down).reshape(-1, 4) / (2.0 * mesh.h_r)
    T2 = (np.roll(inner, -1, axis=1) - np.roll(inner, 1, axis=1)).reshape(-1, 4)
    T2 /= 2.0 * mesh.h_theta
    ids = 1 + np.arange((n_r - 1) * n_t)
    _, _, nu = geometry._frames(x, T1, T2, ids)
    # center tangents from the first angular harmonic of ring 1
    th = np.arange(n_t) * (2.0 * np.pi / n_t)
    Tc1 = 2.0 * np.mean(rings[0] * np.cos(th)[:, None], axis=0)
    Tc2 = 2.0 * np.mean(rings[0] * np.sin(th)[:, None], axis=0)
    _, _, nuc = geometry._frames(
        pts[0][None, :], Tc1[None, :], Tc2[None, :], np.zeros(1, dtype=int)
    )
    return np.concatenate([pts[0][None, :], x]), np.concatenate([nuc, nu])


def _fold_nodes(pi_l, mesh):
    """Node ids on triangles whose image orientation disagrees.

    The triangulation splits each grid quad between interior rings and fans
    the center; a well-projected surface keeps one signed-area sign
    throughout, so the minority sign marks folded triangles.
    """
    n_r, n_t = mesh.n_r, mesh.n_theta
    j = np.arange(n_t)
    tris = [
        np.stack(
            [np.zeros(n_t, dtype=int), mesh.node_id(1, j), mesh.node_id(1, j + 1)],
            axis=1,
        )
    ]
    for i in range(1, n_r - 1):
        a = mesh.node_id(i, j)
        b = mesh.node_id(i, j + 1)
        c = mesh.node_id(i + 1, j)
        d = mesh.node_id(i + 1, j + 1)
        tris.append(np.stack([a, c, d], axis=1))
        tris.append(np.stack([a, d, b], axis=1))
    tris = np.concatenate(tris)
    za, zb, zc = pi_l[tris[:, 0]], pi_l[tris[:, 1]], pi_l[tris[:, 2]]
    area2 = np.imag(np.conj(zb - za) * (zc - za))
    majority = 1.0 if np.count_nonzero(area2 > 0) * 2 >= area2.size else -1.0
    bad = majority * area2 <= 0.0
    return np.unique(tris[bad])


def _orthonormal_frame(forms):
    """I-orthonormal pair per node: e1 along the first chart direction."""
    m = forms.I.shape[0]
    e1 = np.zeros((m, 2))
    e1[:, 0] = 1.0 / np.sqrt(forms.I[:, 0, 0])
    e2 = np.einsum("nij,nj->ni", forms.J, e1)
    return e1, e2


def _shear_components(forms):
    """Traceless shape operator in the orthonormal frame, symmetrized.

    Returns (p, q, P) with the operator [[p, q], [q, -p]] and P the
    column matrix of the frame; p + iq has modulus lambda up to the
    self-adjointness defect of the discrete fit.
    """
    e1, e2 = _orthonormal_frame(forms)
    P = np.stack([e1, e2], axis=-1)
    trB = forms.B[:, 0, 0] + forms.B[:, 1, 1]
    B0 = forms.B - 0.5 * trB[:, None, None] * _EYE2
    S = np.linalg.solve(P, np.einsum("nij,njk->nik", B0, P))
    p = 0.5 * (S[:, 0, 0] - S[:, 1, 1])
    q = 0.5 * (S[:, 0, 1] + S[:, 1, 0])
    return p, q, P


def _beltrami_fit(mesh, forms, w, zsrc=None):
    """Least-squares Beltrami coefficient of node values w per node.

    Source differentials are conformal-chart displacements built from the
    metric (or differences of zsrc when given); each node uses its grid
    star, one-sided in radius on the last interior ring.  The center has no
    chart and comes back NaN.
    """
    n_r, n_t = mesh.n_r, mesh.n_theta
    m = mesh.n_interior
    ids = np.arange(m)
    ring = mesh.ring_of(ids)
    sec = (ids - 1) % n_t
    e1, e2 = _orthonormal_frame(forms)
    v1 = np.einsum("nij,nj->ni", forms.I, e1)
    v2 = np.einsum("nij,nj->ni", forms.I, e2)
    G11 = np.zeros(m)
    G12 = np.zeros(m, complex)
    R1 = np.zeros(m, complex)
    R2 = np.zeros(m, complex)
    for di, dj in (
        (-1, 0), (1, 0), (0, -1), (0, 1),
        (-1, -1), (-1, 1), (1, -1), (1, 1),
    ):
        nring = ring + di
        ok = (ring >= 1) & (nring <= n_r - 1)
        # the collapsed ring-0 neighbor only makes sense radially
        ok &= (nring >= 1) | (dj == 0)
        nid = np.where(nring <= 0, 0, mesh.node_id(np.maximum(nring, 1), sec + dj))
        nid = np.where(ok, nid, 0)
        if zsrc is None:
            a = di * mesh.h_r * v1[:, 0] + dj * mesh.h_theta * v1[:, 1]
            b = di * mesh.h_r * v2[:, 0] + dj * mesh.h_theta * v2[:, 1]
            zeta = a + 1j * b
        else:
            zeta = zsrc[nid] - zsrc
        dw = np.where(ok, w[nid] - w, 0.0)
        zeta = np.where(ok, zeta, 0.0)
        G11 += np.abs(zeta) ** 2
        G12 += np.conj(zeta) ** 2
        R1 += np.conj(zeta) * dw
        R2 += zeta * dw
    with np.errstate(invalid="ignore", divide="ignore"):
        det = G11 * G11 - np.abs(G12) ** 2
        a_fit = (G11 * R1 - G12 * R2) / det
        b_fit = (G11 * R2 - np.conj(G12) * R1) / det
        mu = b_fit / a_fit
    mu[0] = np.nan
    return mu


def build_extension(sol, forms):
    """Assemble the per-node projection pair and its Beltrami data.

    Projects every interior node through its ruling pair, rejects folded
    left images, fits mu_measured in the eigenframe of the traceless shape
    operator, and evaluates the closed-form coefficient from lambda and H.
    """
    mesh = sol.mesh
    if forms.mesh is not mesh:
        raise ConfigError("forms were not computed on this solution's mesh")
    if not sol.converged:
        raise ConfigError("extension requires a converged solution")
    x, nu = _surface_frames(sol)
    m = x.shape[0]
    L = np.empty((m, 2, 2))
    R = np.empty((m, 2, 2))
    for k in range(m):
        g = ads.tangent_plane_isometry(x[k], nu[k])
        L[k] = g.left
        R[k] = g.right
    pi_l = _disk_point(ads.from_matrix(np.einsum("nij,nkj->nik", L, L)))
    pi_r = _disk_point(ads.from_matrix(np.einsum("nij,nkj->nik", R, R)))

    folded = _fold_nodes(pi_l, mesh)
    if folded.size:
        shown = ", ".join(str(i) for i in folded[:8])
        more = "" if folded.size <= 8 else f" (+{folded.size - 8} more)"
        raise ProjectionFold(f"left projection folds at nodes {shown}{more}")

    H = sol.H
    mu_formula = dilatation_formula(forms.lam, H)

    # rotate the fit into the -lambda eigenframe, where the formula lives
    p, q, _ = _shear_components(forms)
    phase = np.exp(-2j * (0.5 * np.arctan2(q, p) + 0.5 * np.pi))
    mu_measured = _beltrami_fit(mesh, forms, pi_l) * phase
    ring = mesh.ring_of(np.arange(m))
    mu_measured[(ring <= 1) | (ring == mesh.n_r - 1)] = np.nan

    am = np.abs(mu_formula)
    with np.errstate(divide="ignore"):
        K_local = np.where(am < 1.0, (1.0 + am) / (1.0 - am), np.inf)
    return ExtensionField(
        mesh=mesh,
        H=H,
        pi_l=pi_l,
        pi_r=pi_r,
        mu_formula=mu_formula,
        mu_measured=mu_measured,
        K_local=K_local,
        checked=np.nonzero(geometry.trusted_nodes(forms))[0],
    )


def max_dilatation(field):
    """Global dilatation constants of an extension field.

    K comes from the closed-form coefficient, K_measured from the fitted
    one (NaN entries skipped).  Both suprema run over field.checked, the
    same trusted set the curvature-bound scan uses, which keeps
    sup|mu_formula| = max lambda / sqrt(1 + H^2) an exact identity with
    that scan's report.  Raises NotQuasiconformal when either supremum
    reaches 1; a supremum within NEAR_DEGENERATE_MARGIN of 1 only sets
    the near_degenerate flag.
    """
    sup_f = float(np.max(np.abs(field.mu_formula[field.checked])))
    measured = np.abs(field.mu_measured[field.checked])
    measured = measured[~np.isnan(measured)]
    sup_m = float(np.max(measured)) if measured.size else 0.0
    for name, sup in (("formula", sup_f), ("measured", sup_m)):
        if sup >= 1.0:
            raise NotQuasiconformal(f"sup|mu_{name}| = {sup:.6f} is not below 1")
    return DilatationReport(
        K=(1.0 + sup_f) / (1.0 - sup_f),
        K_measured=(1.0 + sup_m) / (1.0 - sup_m),
        sup_formula=sup_f,
        sup_measured=sup_m,
        near_degenerate=max(sup_f, sup_m) >= 1.0 - NEAR_DEGENERATE_MARGIN,
    )


def landslide_angle(forms, H, lam_min=LAMBDA_MIN):
    """Landslide angle estimate from the Hopf values of both projections.

    Builds hopf_l and hopf_r as the (2,0)-parts of I((H E -+ J) B0, .) in
    each node's conformal frame; their ratio is the constant e^{2 i theta}
    with theta = pi/2 - arctan(H).  Nodes below lam_min carry no usable
    anisotropy and are excluded from the circular mean; fewer than 10% of
    usable nodes raises LandslideUndefined.
    """
    lam = forms.lam
    used = lam >= lam_min
    if np.count_nonzero(used) < 0.1 * lam.size:
        raise LandslideUndefined(
            f"only {np.count_nonzero(used)} of {lam.size} nodes have "
            f"lambda >= {lam_min:g}"
        )
    p, q, P = _shear_components(forms)
    S = np.zeros((lam.size, 2, 2))
    S[:, 0, 0] = p
    S[:, 0, 1] = S[:, 1, 0] = q
    S[:, 1, 1] = -p
    PS = np.einsum("nij,njk->nik", P, S)
    B0 = np.swapaxes(
        np.linalg.solve(np.swapaxes(P, 1, 2), np.swapaxes(PS, 1, 2)), 1, 2
    )
    I, J = forms.I, forms.J
    hopf = {}
    for sgn in (-1.0, 1.0):
        A = H * _EYE2[None] + sgn * J
        M = np.einsum("nij,njk,nkl->nil", I, A, B0)
        N = np.einsum("nij,njk,nkl,nlm->nim", I, J, A, B0)
        C = np.einsum("nji,njk,nkl->nil", P, M, P) + 1j * np.einsum(
            "nji,njk,nkl->nil", P, N, P
        )
        hopf[sgn] = 0.25 * ((C[:, 0, 0] - C[:, 1, 1]) - 1j * (C[:, 0, 1] + C[:, 1, 0]))
    hopf_l, hopf_r = hopf[-1.0], hopf[1.0]
    ratio = hopf_l[used] / hopf_r[used]
    mean = np.mean(ratio / np.abs(ratio))
    theta = 0.5 * np.angle(mean)
    if theta < 0.0:
        theta += np.pi
    target = 0.5 * np.pi - np.arctan(H)
    dev = abs(theta - target) % np.pi
    dev = min(dev, np.pi - dev)
    return theta, HopfField(
        hopf_l=hopf_l,
        hopf_r=hopf_r,
        theta_est=theta,
        theta_dev=dev,
        used=used,
    )
