"""Damped Newton solver for constant-mean-curvature graphs over the disk.

The unknown is the fiber coordinate u per mesh node.  Cell balances of the
flux chi^2 v grad u against the source 2 H chi give the residual; its root is
the H-surface.  Steps are damped both by Armijo backtracking on the residual
norm and by a hard guard on the spacelike margin, since the equation
degenerates at the lightlike barrier chi^2 |grad u|^2 = 1.
"""

import functools
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from . import _kernels
from .errors import ConfigError, NotSpacelike, SolveFailed
from .mesh import DiskMesh

EPS_SPACELIKE = 1e-6
TOL_NEWTON = 1e-10
MAX_ITER = 50
DAMP_FLOOR = 2.0**-20
_ARMIJO_SLOPE = 1e-4


@dataclass
class SurfaceSolution:
    """A graph over the mesh together with its solve diagnostics."""

    mesh: DiskMesh
    u: np.ndarray
    H: float
    residual_norm: float
    spacelike_margin: float
    v: np.ndarray
    converged: bool
    iterations: int


@dataclass
class FoliationSweep:
    """Leaves of one boundary datum across an H grid, shared mesh."""

    mesh: DiskMesh
    H_grid: np.ndarray
    leaves: list
    bc: np.ndarray
    mono_gap: float


@functools.lru_cache(maxsize=32)
def _tables(mesh):
    return _kernels.build_tables(mesh)


def boundary_values(gamma, mesh, H=0.0):
    """Dirichlet data at the outer ring: the asymptotic profile at radius R.

    Plain truncation u(R) = g(alpha) leaves a boundary layer of size e^{-R}
    whenever H != 0; matching the far-field expansion gives the first-order
    datum g + arcsin(W / (2 cosh R)) with W = -2H sqrt((1 - g'^2)/(1 + H^2)),
    which is exact on the equidistant family and drops the truncation error
    to the e^{-2R} scale.  H = 0 reduces to the plain profile.
    """
    alpha = mesh.boundary_angles()
    g = gamma.profile(alpha)
    H = float(H)
    if H == 0.0:
        return g
    gp = gamma.profile_slope(alpha)
    W = -2.0 * H * np.sqrt(np.clip(1.0 - gp**2, 0.0, None) / (1.0 + H * H))
    return g + np.arcsin(W / (2.0 * np.cosh(mesh.R_max)))


def residual(u, H, mesh, eps_sl=EPS_SPACELIKE):
    """Cell-averaged residual of the graph equation at interior nodes."""
    g = _tables(mesh)
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_nodes,):
        raise ConfigError(f"u has shape {u.shape}, expected ({mesh.n_nodes},)")
    res, margin, worst, _ = _kernels.assemble(u, float(H), g, False)
    if margin < eps_sl:
        raise NotSpacelike(
            f"edge margin {margin:.3e} < {eps_sl:.1e} at node {worst}"
        )
    return res


def exact_umbilic(rho, mesh):
    """Equidistant surface of the central plane as a mesh fixture.

    u(s) = arcsin(sin rho / cosh s); constant mean curvature -tan(rho).
    """
    rho = float(rho)
    if not abs(rho) < np.pi / 2:
        raise ConfigError(f"|rho| = {abs(rho):.4f} >= pi/2")
    g = _tables(mesh)
    u = np.arcsin(np.sin(rho) / np.cosh(mesh.radii()))
    H = -np.tan(rho)
    res, _, _, _ = _kernels.assemble(u, H, g, False)
    margin, v = _kernels.node_margins(u, g)
    return SurfaceSolution(
        mesh=mesh,
        u=u,
        H=H,
        residual_norm=float(np.max(np.abs(res))),
        spacelike_margin=float(np.min(margin)),
        v=v,
        converged=True,
        iterations=0,
    )


def _bc_ramp(mesh):
    """Per-ring weight psi = (1 - sech s) / (1 - sech R_max), 0 -> 1."""
    s_ring = np.arange(1, mesh.n_r + 1) * mesh.h_r
    return (1.0 - 1.0 / np.cosh(s_ring)) / (1.0 - 1.0 / np.cosh(mesh.R_max))


def _match_boundary(u, bc, mesh):
    """Blend the field onto the Dirichlet data along the ramp, in place.

    A hard overwrite of the outer ring leaves a one-cell jump that is not
    spacelike once the mesh resolves it (chi^2 there is large), so the
    correction is spread smoothly over the whole radius.  A field already
    matching bc is untouched.
    """
    gap = bc - u[mesh.n_interior:]
    rings = u[1:].reshape(mesh.n_r, mesh.n_theta)
    rings += _bc_ramp(mesh)[:, None] * gap[None, :]
    u[mesh.n_interior:] = bc
    return u


def initial_guess(mesh, bc, H, backbone="umbilic"):
    """Spacelike starting field matching the boundary data.

    The radial backbone is the equidistant surface of matching H
    ("umbilic") or the central plane ("zero"); the gap to the boundary
    datum is ramped inward by _match_boundary.
    """
    if backbone not in ("umbilic", "zero"):
        raise ConfigError(f"unknown init backbone {backbone!r}")
    bc = np.asarray(bc, dtype=float)
    s = mesh.radii()
    if backbone == "umbilic":
        rho = -np.arctan(H)
        base = np.arcsin(np.sin(rho) / np.cosh(s))
    else:
        base = np.zeros_like(s)
    return _match_boundary(base, bc, mesh)


def _fd_jacobian(u, H, g, n_int):
    """Stencil-support Jacobian by central differencing, column by column.

    Quadratic in the node count; meant for cross-checking the analytic
    assembly on small meshes, not for production solves.
    """
    J = np.zeros((n_int, n_int))
    for k in range(n_int):
        h = 6e-6 * (1.0 + abs(u[k]))
        up = u.copy()
        up[k] += h
        um = u.copy()
        um[k] -= h
        rp, _, _, _ = _kernels.assemble(up, H, g, False)
        rm, _, _, _ = _kernels.assemble(um, H, g, False)
        J[:, k] = (rp - rm) / (2.0 * h)
    return csc_matrix(J)


def solve(
    mesh,
    bc,
    H,
    init=None,
    *,
    tol=TOL_NEWTON,
    max_iter=MAX_ITER,
    eps_sl=EPS_SPACELIKE,
    jac="analytic",
    trace=None,
):
    """Newton iteration from `init` (zeros by default) at fixed H.

    Returns a SurfaceSolution; a run that stalls or exhausts max_iter comes
    back with converged=False and the best iterate, never an exception.
    `trace`, if given, collects a copy of every accepted iterate.
    """
    if jac not in ("analytic", "fd"):
        raise ConfigError(f"unknown jacobian mode {jac!r}")
    g = _tables(mesh)
    H = float(H)
    n_int = mesh.n_interior
    bc = np.asarray(bc, dtype=float)
    if bc.shape != (mesh.n_theta,):
        raise ConfigError(f"bc has shape {bc.shape}, expected ({mesh.n_theta},)")

    if init is None:
        u = initial_guess(mesh, bc, H)
    else:
        u = np.array(init, dtype=float)
        if u.shape != (mesh.n_nodes,):
            raise ConfigError(f"init has shape {u.shape}, expected ({mesh.n_nodes},)")
        _match_boundary(u, bc, mesh)

    res, margin, worst, _ = _kernels.assemble(u, H, g, False)
    if margin < eps_sl:
        raise NotSpacelike(
            f"initial guess: edge margin {margin:.3e} < {eps_sl:.1e} at node {worst}"
        )
    inf_norm = float(np.max(np.abs(res)))
    iterations = 0
    converged = inf_norm <= tol

    while not converged and iterations < max_iter:
        if jac == "analytic":
            _, _, _, (rows, cols, vals) = _kernels.assemble(u, H, g, True)
            J = csc_matrix((vals, (rows, cols)), shape=(n_int, n_int))
        else:
            J = _fd_jacobian(u, H, g, n_int)
        delta = splu(J).solve(-res)
        r2 = float(np.linalg.norm(res))
        step = 1.0
        accepted = False
        while step >= DAMP_FLOOR:
            u_try = u.copy()
            u_try[:n_int] += step * delta
            res_try, m_try, _, _ = _kernels.assemble(u_try, H, g, False)
            if m_try >= eps_sl and (
                float(np.linalg.norm(res_try)) <= (1.0 - _ARMIJO_SLOPE * step) * r2
            ):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        u, res = u_try, res_try
        inf_norm = float(np.max(np.abs(res)))
        iterations += 1
        if trace is not None:
            trace.append(u.copy())
        converged = inf_norm <= tol

    node_margin, v = _kernels.node_margins(u, g)
    spacelike_margin = float(np.min(node_margin))
    return SurfaceSolution(
        mesh=mesh,
        u=u,
        H=H,
        residual_norm=inf_norm,
        spacelike_margin=spacelike_margin,
        v=v,
        converged=bool(converged and spacelike_margin > 0.0),
        iterations=iterations,
    )


def sweep_foliation(mesh, bc, H_grid, *, continuation=True, tol_mono=1e-8, **solve_kw):
    """Solve every H in the grid and order-check the leaves.

    `bc` is one shared boundary datum: either a fixed array of outer-ring
    values, or a QuasiCircle, in which case each leaf gets the H-corrected
    truncation datum from boundary_values (the asymptotic curve is shared,
    the finite-radius surrogate depends on H).  Continuation walks outward
    from the H nearest zero, seeding each solve with its already-solved
    neighbor; independent-init mode starts every leaf from the default
    guess.  Leaves of a converged sweep decrease pointwise in H (larger H
    bends the surface toward the past); a violation beyond tol_mono fails
    the sweep.
    """
    H_grid = np.asarray(H_grid, dtype=float)
    if H_grid.ndim != 1 or H_grid.size == 0:
        raise ConfigError("H_grid must be a nonempty 1-D array")
    if H_grid.size > 1 and np.any(np.diff(H_grid) <= 0):
        raise ConfigError("H_grid must be strictly increasing")
    if np.max(np.abs(H_grid)) > 4.0:
        raise ConfigError("|H| > 4 outside the supported sweep range")

    if hasattr(bc, "profile"):
        leaf_bc = [boundary_values(bc, mesh, H) for H in H_grid]
        bc_out = bc.profile(mesh.boundary_angles())
    else:
        bc_arr = np.asarray(bc, dtype=float)
        leaf_bc = [bc_arr] * H_grid.size
        bc_out = bc_arr

    leaves = [None] * H_grid.size
    k0 = int(np.argmin(np.abs(H_grid)))
    order = [k0]
    order += list(range(k0 + 1, H_grid.size))
    order += list(range(k0 - 1, -1, -1))
    for k in order:
        if continuation:
            if k > k0:
                init = leaves[k - 1].u
            elif k < k0:
                init = leaves[k + 1].u
            else:
                init = None
        else:
            init = None
        try:
            leaf = solve(mesh, leaf_bc[k], H_grid[k], init=init, **solve_kw)
        except NotSpacelike as err:
            raise SolveFailed(f"H = {H_grid[k]:.6g}: {err}") from err
        if not leaf.converged:
            raise SolveFailed(
                f"H = {H_grid[k]:.6g}: residual {leaf.residual_norm:.3e} "
                f"after {leaf.iterations} iterations"
            )
        leaves[k] = leaf

    mono_gap = 0.0
    for a, b in zip(leaves[:-1], leaves[1:]):
        mono_gap = max(mono_gap, float(np.max(b.u - a.u)))
    if mono_gap > tol_mono:
        raise SolveFailed(
            f"foliation leaves not monotone in H: worst gap {mono_gap:.3e}"
        )
    return FoliationSweep(
        mesh=mesh, H_grid=H_grid, leaves=leaves, bc=bc_out, mono_gap=mono_gap,
    )
