"""Vectorized reference implementation of the assembly kernels.

The compiled backend mirrors these formulas loop-for-loop; parity tests hold
the two to near machine agreement.  Layout notes: `u` is the flat node vector
(center first, then rings inside out), `Uext` is the (n_r + 1, n_theta) grid
with the center value replicated across row 0 so radial differences are
uniform, and every edge quantity lives on an (edges, n_theta) grid.
"""

import numpy as np

_TINY = 1e-30


def _grids(u, g):
    n_r, n_t = g.n_r, g.n_theta
    Uext = np.empty((n_r + 1, n_t))
    Uext[0] = u[0]
    Uext[1:] = u[1:].reshape(n_r, n_t)
    # invariant tangential derivative (1/sinh s) du/dtheta at each ring node
    D = np.zeros_like(Uext)
    D[1:] = (np.roll(Uext[1:], -1, axis=1) - np.roll(Uext[1:], 1, axis=1)) / (
        2.0 * g.h_theta * g.sinh_ring[1:, None]
    )
    return Uext, D


def _radial_edges(Uext, D, g):
    """Per radial edge: difference, invariant gradient parts, margin, v."""
    delta = Uext[1:] - Uext[:-1]
    dur = delta / g.h_r
    t = 0.5 * (D[:-1] + D[1:])
    t[0] = D[1]
    m = 1.0 - g.chi2_rad[:, None] * (dur**2 + t**2)
    v = 1.0 / np.sqrt(np.maximum(m, _TINY))
    return delta, dur, t, m, v


def _angular_edges(Uext, g):
    n_r = g.n_r
    A = Uext[1:n_r]
    delta = np.roll(A, -1, axis=1) - A
    dut = delta / (g.h_theta * g.sinh_ring[1:n_r, None])
    rc = (Uext[2 : n_r + 1] - Uext[0 : n_r - 1]) / (2.0 * g.h_r)
    re = 0.5 * (rc + np.roll(rc, -1, axis=1))
    m = 1.0 - g.chi2_ang[1:n_r, None] * (dut**2 + re**2)
    v = 1.0 / np.sqrt(np.maximum(m, _TINY))
    return delta, dut, re, m, v


def _id_grid(g):
    n_r, n_t = g.n_r, g.n_theta
    ids = np.empty((n_r + 1, n_t), dtype=np.int64)
    ids[0] = 0
    ids[1:] = np.arange(1, 1 + n_r * n_t).reshape(n_r, n_t)
    return ids


def _worst(m_rad, m_ang, g):
    """Min edge margin and the id of an interior node on the worst edge."""
    n_r, n_t = g.n_r, g.n_theta
    i_rad = np.argmin(m_rad)
    i_ang = np.argmin(m_ang) if m_ang.size else 0
    min_rad = m_rad.flat[i_rad]
    min_ang = m_ang.flat[i_ang] if m_ang.size else np.inf
    if min_rad <= min_ang:
        e, j = divmod(int(i_rad), n_t)
        ring = min(e + 1, n_r - 1)
        return float(min_rad), 1 + (ring - 1) * n_t + j
    i, j = divmod(int(i_ang), n_t)
    return float(min_ang), 1 + i * n_t + j


def assemble(u, H, g, want_jac):
    """Residual, min edge margin, worst node, optional Jacobian triplets."""
    n_r, n_t = g.n_r, g.n_theta
    n_int = 1 + (n_r - 1) * n_t
    Uext, D = _grids(u, g)
    delta_r, dur, t_r, m_rad, v_rad = _radial_edges(Uext, D, g)
    delta_a, dut, re_a, m_ang, v_ang = _angular_edges(Uext, g)

    f = g.c_rad[:, None] * v_rad * delta_r
    gfx = g.c_ang[1:n_r, None] * v_ang * delta_a

    res = np.empty(n_int)
    res[0] = (f[0].sum() - 2.0 * H * g.srcint[0]) * g.inv_area[0]
    bal = f[1:n_r] - f[0 : n_r - 1] + gfx - np.roll(gfx, 1, axis=1)
    res[1:] = (bal.ravel() - 2.0 * H * g.srcint[1:]) * g.inv_area[1:]

    margin, worst = _worst(m_rad, m_ang, g)
    if not want_jac:
        return res, margin, worst, None

    ids = _id_grid(g)
    inv_area_of = np.zeros(1 + n_r * n_t)
    inv_area_of[:n_int] = g.inv_area
    rows, cols, vals = [], [], []

    def push(row_ids, col_ids, dfdk, sign):
        # one flux derivative lands with +1/A on its A-row, -1/A on its B-row
        r = row_ids.ravel()
        ok = r < n_int
        c = col_ids.ravel()[ok]
        v = (sign * dfdk.ravel()[ok]) * inv_area_of[r[ok]]
        keep = c < n_int
        rows.append(r[ok][keep])
        cols.append(c[keep])
        vals.append(v[keep])

    # radial edges: w = c * dv/dq * delta, dv/dq = chi^2 v^3 / 2
    c_r = g.c_rad[:, None]
    w_r = 0.5 * c_r * g.chi2_rad[:, None] * v_rad**3 * delta_r
    cv_r = c_r * v_rad
    dA = -2.0 * w_r * delta_r / g.h_r**2 - cv_r
    dB = -dA
    rowA = ids[:-1].copy()
    rowA[0] = 0
    rowB = ids[1:]
    for row, sgn in ((rowA, 1.0), (rowB, -1.0)):
        push(row, rowA, dA, sgn)
        push(row, rowB, dB, sgn)
    # tangential stencil, split by edge kind (center edges read only ring 1)
    two_t = 2.0 * w_r * t_r
    coef_in = np.zeros((n_r, 1))
    coef_out = np.empty((n_r, 1))
    coef_in[1:, 0] = 1.0 / (4.0 * g.h_theta * g.sinh_ring[1:n_r])
    coef_out[:, 0] = 1.0 / (4.0 * g.h_theta * g.sinh_ring[1 : n_r + 1])
    coef_out[0, 0] *= 2.0
    for ring_ids, coef in ((rowA, coef_in), (ids[1:], coef_out)):
        dfd = two_t * coef
        for shift, sgn_c in ((-1, 1.0), (1, -1.0)):
            col = np.roll(ring_ids, shift, axis=1)
            for row, sgn in ((rowA, 1.0), (rowB, -1.0)):
                push(row, col, sgn_c * dfd, sgn)

    # angular edges
    c_a = g.c_ang[1:n_r, None]
    w_a = 0.5 * c_a * g.chi2_ang[1:n_r, None] * v_ang**3 * delta_a
    cv_a = c_a * v_ang
    dd = 2.0 * w_a * dut / (g.h_theta * g.sinh_ring[1:n_r, None])
    dr = 2.0 * w_a * re_a / (4.0 * g.h_r)
    rowP = ids[1:n_r]
    rowQ = np.roll(rowP, -1, axis=1)
    up = ids[2 : n_r + 1]
    down = ids[0 : n_r - 1]
    pieces = (
        (rowP, -dd - cv_a),
        (rowQ, dd + cv_a),
        (up, dr),
        (down, -dr),
        (np.roll(up, -1, axis=1), dr),
        (np.roll(down, -1, axis=1), -dr),
    )
    for col, dfd in pieces:
        for row, sgn in ((rowP, 1.0), (rowQ, -1.0)):
            push(row, col, dfd, sgn)

    triplets = (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
    return res, margin, worst, triplets


def node_margins(u, g):
    """Per-node spacelike margin 1 - chi^2 |grad u|^2 and gradient function v.

    Reporting quantities: central differences at ring nodes, a first-harmonic
    fit at the center, one-sided radial at the Dirichlet ring.
    """
    n_r, n_t = g.n_r, g.n_theta
    Uext, D = _grids(u, g)
    grad2 = np.empty((n_r + 1, n_t))
    theta = np.arange(n_t) * g.h_theta
    a = 2.0 * np.mean(Uext[1] * np.cos(theta))
    b = 2.0 * np.mean(Uext[1] * np.sin(theta))
    grad2[0] = (a * a + b * b) / g.s_first**2
    gr = np.empty((n_r, n_t))
    gr[: n_r - 1] = (Uext[2:] - Uext[: n_r - 1]) / (2.0 * g.h_r)
    gr[n_r - 1] = (Uext[n_r] - Uext[n_r - 1]) / g.h_r
    grad2[1:] = gr**2 + D[1:] ** 2
    margin = 1.0 - g.chi_node[:, None] ** 2 * grad2
    v = 1.0 / np.sqrt(np.maximum(margin, _TINY))
    out_m = np.empty(1 + n_r * n_t)
    out_v = np.empty_like(out_m)
    out_m[0], out_v[0] = margin[0, 0], v[0, 0]
    out_m[1:], out_v[1:] = margin[1:].ravel(), v[1:].ravel()
    return out_m, out_v
