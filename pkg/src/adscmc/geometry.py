"""Extrinsic geometry of a solved surface.

Forms are measured directly in the ambient quadric: each node's 3x3 stencil
is pulled back to the tangent space by the exact log map, the future unit
normal comes from the generalized cross product, and a quadratic patch fit
reads off the second fundamental form.  Everything downstream (principal
curvature bounds, the log-curvature identity, equidistant operators, the
normal flow) consumes those per-node matrices.
"""

from dataclasses import dataclass

import numpy as np

from . import ads
from .errors import ConfigError, DegenerateNode, NonSmoothEquidistant, NothingToCheck
from .mesh import DiskMesh

LAMBDA_MIN = 1e-4

# Patch-quality ceiling for the curvature estimator.  The quadratic fit
# reads II off a 3x3 stencil whose angular footprint on the embedded
# surface scales like h_theta cosh(s) stretched by the Lorentz factor of
# the tilt; once that extent passes ~0.4 the fitted lambda inflates by
# 20% and worse (calibrated against angular-refinement studies on the
# regression scenarios).
PATCH_QUALITY_MAX = 0.4

_EYE2 = np.eye(2)


@dataclass
class FundamentalForms:
    """Per-interior-node forms in the (radial, angular) coordinate frame.

    `lam` is the positive eigenvalue of the traceless shape operator (the
    field the text calls lambda; renamed only because of the keyword), and
    `beta` is its log, -inf at exactly umbilic nodes.
    """

    mesh: DiskMesh
    I: np.ndarray
    II: np.ndarray
    B: np.ndarray
    lam: np.ndarray
    K: np.ndarray
    beta: np.ndarray
    J: np.ndarray

    @property
    def n_nodes(self):
        return self.I.shape[0]

    @property
    def H_est(self):
        """Half-trace of the shape operator, per node."""
        return 0.5 * np.trace(self.B, axis1=1, axis2=2)


@dataclass
class BoundsReport:
    """Outcome of the principal-curvature bound scan."""

    max_lambda: float
    margin: float
    tol_bound: float
    violations: np.ndarray
    checked: np.ndarray


def _log_map(x, y):
    """Tangent vectors at x pointing to nearby quadric points y.

    Spacelike separations only: y decomposes as cosh(r) x + sinh(r) w with
    unit spacelike w, and the log is r w.  Broadcasts over leading axes of y
    against a single x per row.
    """
    xb = np.broadcast_to(x[..., None, :], y.shape)
    c = -np.einsum("...i,...i->...", xb * ads.METRIC_DIAG, y)
    c = np.clip(c, 1.0, None)
    r = np.arccosh(c)
    small = r < 1e-6
    sinh = np.where(small, 1.0, np.sinh(np.where(small, 1.0, r)))
    factor = np.where(small, 1.0 - r * r / 6.0, r / sinh)
    return factor[..., None] * (y - c[..., None] * xb)


def _cross4(x, t1, t2):
    """eta-orthogonal complement of span(x, t1, t2), batched over rows."""
    m = np.stack([x, t1, t2], axis=-2)
    cov = np.empty(x.shape)
    sign = 1.0
    for col in range(4):
        keep = [c for c in range(4) if c != col]
        cov[..., col] = sign * np.linalg.det(m[..., keep])
        sign = -sign
    return cov * ads.METRIC_DIAG


def _fit_patch(v, nu, t1, t2, node_ids):
    """Quadratic height fit over each stencil, in the (t1, t2, nu) frame.

    v has shape (n, k, 4): log-map offsets of the k stencil points.  Returns
    the 2x2 Hessian blocks, which are the second fundamental form w.r.t. the
    future normal under the convention B(X) = grad_X nu.
    """
    eta = ads.METRIC_DIAG
    a = np.einsum("nki,ni->nk", v * eta, t1)
    b = np.einsum("nki,ni->nk", v * eta, t2)
    h = -np.einsum("nki,ni->nk", v * eta, nu)
    cols = np.stack(
        [np.ones_like(a), a, b, 0.5 * a * a, a * b, 0.5 * b * b], axis=-1
    )
    G = np.einsum("nkp,nkq->npq", cols, cols)
    rhs = np.einsum("nkp,nk->np", cols, h)
    try:
        coef = np.linalg.solve(G, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        ranks = np.linalg.matrix_rank(G)
        bad = node_ids[np.nonzero(ranks < 6)[0][0]]
        raise DegenerateNode(f"stencil fit is rank deficient at node {bad}")
    hess = np.empty((v.shape[0], 2, 2))
    hess[:, 0, 0] = coef[:, 3]
    hess[:, 0, 1] = hess[:, 1, 0] = coef[:, 4]
    hess[:, 1, 1] = coef[:, 5]
    return hess


def _frames(x, T1, T2, node_ids):
    """Orthonormal tangent pair and future unit normal per node."""
    eta = ads.METRIC_DIAG

    def dot(p, q):
        return np.einsum("ni,ni->n", p * eta, q)

    n1 = dot(T1, T1)
    if np.any(n1 <= 1e-14):
        raise DegenerateNode(
            f"radial tangent degenerate at node {node_ids[np.argmin(n1)]}"
        )
    e1 = T1 / np.sqrt(n1)[:, None]
    t2p = T2 - dot(T2, e1)[:, None] * e1
    n2 = dot(t2p, t2p)
    if np.any(n2 <= 1e-14):
        raise DegenerateNode(
            f"stencil tangents collinear at node {node_ids[np.argmin(n2)]}"
        )
    e2 = t2p / np.sqrt(n2)[:, None]
    nu = _cross4(x, e1, e2)
    nn = dot(nu, nu)
    if np.any(nn >= -1e-14):
        raise DegenerateNode(
            f"normal not timelike at node {node_ids[np.argmax(nn)]}"
        )
    nu = nu / np.sqrt(-nn)[:, None]
    # future orientation: negative product with the time-circle direction
    flip = dot(nu, ads.future_time_direction(x)) > 0
    nu[flip] *= -1.0
    return e1, e2, nu


def _coordinate_I_J_and_P(T1, T2, e1, e2):
    """Induced metric, +pi/2 rotation, and frame-change per node.

    P carries coordinate-frame components to the orthonormal frame, so
    II_coord = P^T Hess P and B_coord = P^{-1} (I_frame^{-1} II_frame) P.
    """
    eta = ads.METRIC_DIAG

    def dot(p, q):
        return np.einsum("ni,ni->n", p * eta, q)

    P = np.empty((T1.shape[0], 2, 2))
    P[:, 0, 0] = dot(T1, e1)
    P[:, 1, 0] = dot(T1, e2)
    P[:, 0, 1] = dot(T2, e1)
    P[:, 1, 1] = dot(T2, e2)
    I = np.einsum("nji,njk->nik", P, P)
    det = I[:, 0, 0] * I[:, 1, 1] - I[:, 0, 1] ** 2
    J = np.empty_like(I)
    sq = np.sqrt(det)
    J[:, 0, 0] = -I[:, 0, 1] / sq
    J[:, 0, 1] = -I[:, 1, 1] / sq
    J[:, 1, 0] = I[:, 0, 0] / sq
    J[:, 1, 1] = I[:, 0, 1] / sq
    return I, J, P


def _forms_on_grid(pts, n_rings, n_theta, h_r, h_theta):
    """Fit forms on a flat ring grid (center + n_rings rings of points).

    Produces arrays for the center and rings 1 .. n_rings - 1; the outermost
    available ring only feeds stencils.  Ring-node matrices are expressed in
    the (s, theta) coordinate frame, the center in its orthonormal frame.
    Node ids in error messages follow the layout shared with DiskMesh.
    """
    rings = pts[1:].reshape(n_rings, n_theta, 4)

    # ring nodes 1 .. n_rings - 1: 3x3 stencil, central-difference tangents
    inner = rings[0 : n_rings - 1]
    up = rings[1:n_rings]
    down = np.empty_like(inner)
    down[0] = pts[0]
    down[1:] = rings[0 : n_rings - 2]
    left = np.roll(inner, 1, axis=1)
    right = np.roll(inner, -1, axis=1)
    x = inner.reshape(-1, 4)
    T1 = (up - down).reshape(-1, 4) / (2.0 * h_r)
    T2 = (right - left).reshape(-1, 4) / (2.0 * h_theta)
    ids = 1 + np.arange((n_rings - 1) * n_theta)
    e1, e2, nu = _frames(x, T1, T2, ids)
    stencil = np.stack(
        [
            inner,
            up,
            down,
            left,
            right,
            np.roll(up, 1, axis=1),
            np.roll(up, -1, axis=1),
            np.roll(down, 1, axis=1),
            np.roll(down, -1, axis=1),
        ],
        axis=2,
    ).reshape(-1, 9, 4)
    v = _log_map(x, stencil)
    hess = _fit_patch(v, nu, e1, e2, ids)
    I_r, J_r, P = _coordinate_I_J_and_P(T1, T2, e1, e2)
    II_r = np.einsum("nji,njk,nkl->nil", P, hess, P)
    B_r = np.linalg.solve(I_r, II_r)

    # center: tangent frame from the first-ring harmonic, stencil rings 1-2
    xc = pts[0]
    ring1 = rings[0]
    ring2 = rings[1]
    th = np.arange(n_theta) * (2.0 * np.pi / n_theta)
    # first-harmonic tangents of the embedded ring, a robust O(h^2) pair
    Tc1 = 2.0 * np.mean(ring1 * np.cos(th)[:, None], axis=0)
    Tc2 = 2.0 * np.mean(ring1 * np.sin(th)[:, None], axis=0)
    ec1, ec2, nuc = _frames(
        xc[None, :], Tc1[None, :], Tc2[None, :], np.zeros(1, dtype=int)
    )
    stc = np.concatenate([xc[None, :], ring1, ring2], axis=0)
    vc = _log_map(xc[None, :], stc[None, :, :])
    hc = _fit_patch(vc, nuc, ec1, ec2, np.zeros(1, dtype=int))
    Ic = np.broadcast_to(_EYE2, (1, 2, 2)).copy()
    Jc = np.array([[[0.0, -1.0], [1.0, 0.0]]])

    I = np.concatenate([Ic, I_r])
    J = np.concatenate([Jc, J_r])
    II = np.concatenate([hc, II_r])
    B = np.concatenate([hc, B_r])
    return I, II, B, J


def compute_forms(sol):
    """Fundamental forms of a spacelike graph solution, per interior node."""
    mesh = sol.mesh
    pts = ads.graph_point(mesh.radii(), mesh.angles(), sol.u)
    I, II, B, J = _forms_on_grid(pts, mesh.n_r, mesh.n_theta, mesh.h_r, mesh.h_theta)
    detB = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    trB = B[:, 0, 0] + B[:, 1, 1]
    # traceless determinant is -(lambda^2) for a self-adjoint B
    det0 = detB - 0.25 * trB**2
    lam = np.sqrt(np.clip(-det0, 0.0, None))
    K = -1.0 - detB
    with np.errstate(divide="ignore"):
        beta = np.where(lam > 0.0, np.log(np.where(lam > 0.0, lam, 1.0)), -np.inf)
    return FundamentalForms(mesh=mesh, I=I, II=II, B=B, lam=lam, K=K, beta=beta, J=J)


def trusted_nodes(forms):
    """Boolean mask of interior nodes whose fitted forms are resolved.

    Two cuts.  The two outermost interior rings sit in the truncation
    boundary layer and go first.  Then the patch-quality cut: the angular
    footprint of the fit stencil on the embedded surface is about
    h_theta cosh(s) v, with the Lorentz factor v of the tilt recovered
    from the induced area element as sinh(s) / sqrt(det I); nodes past
    PATCH_QUALITY_MAX report inflated curvature and are dropped.  The
    center always survives both cuts (its q is h_theta itself, under the
    ceiling for every legal mesh), so the mask is never empty.
    """
    mesh = forms.mesh
    ring = mesh.ring_of(np.arange(forms.n_nodes))
    s = mesh.radii()[: forms.n_nodes]
    detI = forms.I[:, 0, 0] * forms.I[:, 1, 1] - forms.I[:, 0, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.sinh(s) / np.sqrt(np.clip(detI, 0.0, None))
    v[ring == 0] = 1.0
    q = mesh.h_theta * np.cosh(s) * v
    structural = ring <= mesh.n_r - 3
    return structural & np.isfinite(q) & (q <= PATCH_QUALITY_MAX)


def principal_bounds_check(forms, H):
    """Scan lambda against the curvature bound sqrt(1 + H^2).

    Runs over the trusted_nodes set, so the truncation layer and the
    nodes where the patch fit is too coarse to believe stay out of the
    scan; violations beyond 10 h^2 are listed, not thrown.
    """
    mesh = forms.mesh
    h = max(mesh.h_r, mesh.h_theta)
    tol_bound = 10.0 * h * h
    checked = np.nonzero(trusted_nodes(forms))[0]
    lam = forms.lam[checked]
    bound = np.sqrt(1.0 + H * H)
    max_lambda = float(np.max(lam))
    violations = checked[lam > bound + tol_bound]
    return BoundsReport(
        max_lambda=max_lambda,
        margin=bound - max_lambda,
        tol_bound=tol_bound,
        violations=violations,
        checked=checked,
    )


def beta_residual(forms, H, mesh, lam_min=LAMBDA_MIN):
    """Residual of the log-curvature identity: half the Laplacian of beta minus (e^{2 beta} - H^2 - 1).

    Masked where beta is unusable: lambda below lam_min at the node or a
    stencil neighbor, the chart-singular center, and the rings without a
    full interior stencil.  beta = log(lambda) blows up along umbilic
    curves, so raising lam_min restricts the check to the resolved
    anisotropic region.  Raises when nothing survives the mask.
    """
    n_int = mesh.n_interior
    if forms.n_nodes != n_int:
        raise ConfigError("forms were not computed on this mesh")
    n_r, n_t = mesh.n_r, mesh.n_theta
    usable = forms.lam >= lam_min

    beta = np.where(usable, forms.beta, 0.0)[1:].reshape(n_r - 1, n_t)
    ok = usable[1:].reshape(n_r - 1, n_t)

    I = forms.I[1:].reshape(n_r - 1, n_t, 2, 2)
    det = I[..., 0, 0] * I[..., 1, 1] - I[..., 0, 1] ** 2
    sq = np.sqrt(det)
    iss = I[..., 1, 1] / det
    ith = I[..., 0, 0] / det
    ist = -I[..., 0, 1] / det

    h_r, h_t = mesh.h_r, mesh.h_theta
    pad = np.pad(beta, ((1, 1), (0, 0)))
    okp = np.pad(ok, ((1, 1), (0, 0)))

    # conservative fluxes for the diagonal part, centered cross term
    w_r = sq * iss
    w_up = 0.5 * (w_r + np.pad(w_r[1:], ((0, 1), (0, 0))))
    w_dn = 0.5 * (w_r + np.pad(w_r[:-1], ((1, 0), (0, 0))))
    f_up = w_up * (pad[2:] - pad[1:-1]) / h_r
    f_dn = w_dn * (pad[1:-1] - pad[:-2]) / h_r
    w_t = sq * ith
    w_lf = 0.5 * (w_t + np.roll(w_t, 1, axis=1))
    w_rt = 0.5 * (w_t + np.roll(w_t, -1, axis=1))
    g_rt = w_rt * (np.roll(beta, -1, axis=1) - beta) / h_t
    g_lf = w_lf * (beta - np.roll(beta, 1, axis=1)) / h_t

    b_s = (pad[2:] - pad[:-2]) / (2.0 * h_r)
    b_t = (np.roll(beta, -1, axis=1) - np.roll(beta, 1, axis=1)) / (2.0 * h_t)
    m = sq * ist
    cross_s = (np.pad(m * b_t, ((1, 1), (0, 0)))[2:] - np.pad(m * b_t, ((1, 1), (0, 0)))[:-2]) / (
        2.0 * h_r
    )
    cross_t = (np.roll(m * b_s, -1, axis=1) - np.roll(m * b_s, 1, axis=1)) / (2.0 * h_t)

    lap = ((f_up - f_dn) / h_r + (g_rt - g_lf) / h_t + cross_s + cross_t) / sq
    # Codazzi for the traceless part of B reads d(beta) o J = 2 omega, so the
    # curvature identity holds with half the metric Laplacian of beta.
    res = 0.5 * lap - (np.exp(2.0 * beta) - H * H - 1.0)

    # the cross terms read diagonal neighbours, so a node is evaluable only
    # with its full 9-point neighbourhood unmasked
    up_ok, dn_ok = okp[2:], okp[:-2]
    good = ok & up_ok & dn_ok
    for shift in (1, -1):
        good &= np.roll(ok, shift, axis=1)
        good &= np.roll(up_ok, shift, axis=1)
        good &= np.roll(dn_ok, shift, axis=1)
    good[0] = False
    good[-1] = False

    out = np.ma.masked_all(n_int)
    flat = np.arange(1, n_int)
    sel = good.ravel()[: n_int - 1]
    out[flat[sel]] = res.ravel()[: n_int - 1][sel]
    if out.count() == 0:
        raise NothingToCheck("every node is masked for the beta identity")
    return out


def equidistant_operators(I, B, rho):
    """Metric and shape operator after flowing distance rho along the normal.

    A = cos(rho) E + sin(rho) B is the tangent map of the flow, so
    I_rho = A^T I A and B_rho = A^{-1} (-sin(rho) E + cos(rho) B).
    """
    I = np.asarray(I, dtype=float)
    B = np.asarray(B, dtype=float)
    c, s = np.cos(rho), np.sin(rho)
    A = c * _EYE2 + s * B
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    if np.any(np.abs(det) < 1e-10):
        raise NonSmoothEquidistant(
            f"normal flow by rho = {float(rho):.6g} folds: |det| = "
            f"{float(np.min(np.abs(det))):.3e}"
        )
    I_rho = np.swapaxes(A, -1, -2) @ I @ A
    B_rho = np.linalg.solve(A, -s * _EYE2 + c * B)
    return I_rho, B_rho


def flat_cmc_offset(H):
    """Signed distance from the flat ruled fixture to its CMC-H equidistant."""
    return 0.5 * np.arctan(np.negative(H))


def convexity_window(H, eps):
    """Open rho-interval whose equidistants are convex, for lambda
    in [0, sqrt(1 + H^2) - eps].

    Interval is (arctan(sqrt(1 + H^2) + H - eps) - pi/2,
    arctan(H - sqrt(1 + H^2) + eps)); negative H is handled by the time
    reflection, so only H >= 0 is accepted here.
    """
    H = float(H)
    eps = float(eps)
    if not 0.0 < eps <= 1.0:
        raise ConfigError(f"eps = {eps} outside (0, 1]")
    if H < 0.0:
        raise ConfigError("H < 0: reflect time and use -H")
    root = np.sqrt(1.0 + H * H)
    lo = np.arctan(root + H - eps) - 0.5 * np.pi
    hi = np.arctan(H - root + eps)
    return float(lo), float(hi)


def normal_flow(sol, rho):
    """Flow every interior node a distance rho along the future unit normal.

    Points move along timelike geodesics: c = cos(rho) x + sin(rho) nu,
    which stays on the quadric exactly.  The per-node smoothness window is
    checked first through the equidistant operators.
    """
    forms = compute_forms(sol)
    equidistant_operators(forms.I, forms.B, rho)
    mesh = sol.mesh
    n_int = mesh.n_interior
    pts = ads.graph_point(mesh.radii(), mesh.angles(), sol.u)[:n_int]

    rings = pts[1:].reshape(mesh.n_r - 1, mesh.n_theta, 4)
    T1 = np.empty_like(rings)
    T1[0] = (rings[1] - pts[0]) * 0.5
    T1[1:-1] = (rings[2:] - rings[:-2]) * 0.5
    # second-order one-sided difference at the last ring that has no outer
    # neighbour inside the interior set
    T1[-1] = 1.5 * rings[-1] - 2.0 * rings[-2] + 0.5 * rings[-3]
    T2 = (np.roll(rings, -1, axis=1) - np.roll(rings, 1, axis=1)) * 0.5
    x = rings.reshape(-1, 4)
    ids = 1 + np.arange((mesh.n_r - 1) * mesh.n_theta)
    _, _, nu = _frames(x, T1.reshape(-1, 4), T2.reshape(-1, 4), ids)

    th = np.arange(mesh.n_theta) * mesh.h_theta
    Tc1 = 2.0 * np.mean(rings[0] * np.cos(th)[:, None], axis=0)
    Tc2 = 2.0 * np.mean(rings[0] * np.sin(th)[:, None], axis=0)
    _, _, nuc = _frames(
        pts[0][None, :], Tc1[None, :], Tc2[None, :], np.zeros(1, dtype=int)
    )

    normals = np.concatenate([nuc, nu])
    return np.cos(rho) * pts + np.sin(rho) * normals
