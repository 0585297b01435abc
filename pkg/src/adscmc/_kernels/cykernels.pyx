# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled assembly kernel: scalar loops over edges, same formulas as the
numpy backend.  Each radial or angular edge contributes a flux to its two
cell balances and up to twelve Jacobian triplets."""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF TINY = 1e-30


cdef inline Py_ssize_t node_id(Py_ssize_t ring, Py_ssize_t j, Py_ssize_t n_t) nogil:
    if ring == 0:
        return 0
    return 1 + (ring - 1) * n_t + ((j + n_t) % n_t)


cdef inline Py_ssize_t push(cnp.int64_t[::1] rows, cnp.int64_t[::1] cols,
                            double[::1] vals, Py_ssize_t k,
                            Py_ssize_t row, Py_ssize_t col, double val,
                            Py_ssize_t n_int, double[::1] inv_area) nogil:
    # boundary columns are Dirichlet data, not unknowns
    if col >= n_int:
        return k
    rows[k] = row
    cols[k] = col
    vals[k] = val * inv_area[row]
    return k + 1


def assemble(u_in, double H, g, bint want_jac):
    cdef double[::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef Py_ssize_t n_r = g.n_r
    cdef Py_ssize_t n_t = g.n_theta
    cdef double h_r = g.h_r
    cdef double h_t = g.h_theta
    cdef double[::1] sinh_ring = g.sinh_ring
    cdef double[::1] c_rad = g.c_rad
    cdef double[::1] chi2_rad = g.chi2_rad
    cdef double[::1] c_ang = g.c_ang
    cdef double[::1] chi2_ang = g.chi2_ang
    cdef double[::1] inv_area = g.inv_area
    cdef double[::1] srcint = g.srcint

    cdef Py_ssize_t n_int = 1 + (n_r - 1) * n_t
    bal_arr = np.zeros(n_int)
    cdef double[::1] bal = bal_arr

    cdef Py_ssize_t cap = 24 * n_r * n_t if want_jac else 1
    rows_arr = np.empty(cap, dtype=np.int64)
    cols_arr = np.empty(cap, dtype=np.int64)
    vals_arr = np.empty(cap, dtype=np.float64)
    cdef cnp.int64_t[::1] rows = rows_arr
    cdef cnp.int64_t[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr
    cdef Py_ssize_t nnz = 0

    cdef double min_rad = 1e300, min_ang = 1e300
    cdef Py_ssize_t worst_rad = 1, worst_ang = 1

    cdef Py_ssize_t e, i, j, A, B, P, Q, ring
    cdef Py_ssize_t cjm, cjp, djm, djp, up_j, dn_j, up_n, dn_n
    cdef double delta, dur, t, q, m, v, f, w, cv
    cdef double dA, dfd, coef_in, coef_out, dd, dr, re, rP, rQ, dut
    cdef double c, chi2

    with nogil:
        # radial edges: ring e -> e + 1, e = 0 touches the center
        for e in range(n_r):
            c = c_rad[e]
            chi2 = chi2_rad[e]
            for j in range(n_t):
                A = node_id(e, j, n_t)
                B = node_id(e + 1, j, n_t)
                delta = u[B] - u[A]
                dur = delta / h_r
                cjp = node_id(e + 1, j + 1, n_t)
                cjm = node_id(e + 1, j - 1, n_t)
                if e == 0:
                    djp = 0
                    djm = 0
                    t = (u[cjp] - u[cjm]) / (2.0 * h_t * sinh_ring[1])
                else:
                    djp = node_id(e, j + 1, n_t)
                    djm = node_id(e, j - 1, n_t)
                    t = 0.5 * (
                        (u[djp] - u[djm]) / (2.0 * h_t * sinh_ring[e])
                        + (u[cjp] - u[cjm]) / (2.0 * h_t * sinh_ring[e + 1])
                    )
                q = dur * dur + t * t
                m = 1.0 - chi2 * q
                if m < min_rad:
                    min_rad = m
                    ring = e + 1 if e + 1 <= n_r - 1 else n_r - 1
                    worst_rad = 1 + (ring - 1) * n_t + j
                v = 1.0 / sqrt(m if m > TINY else TINY)
                f = c * v * delta
                bal[A] += f
                if B < n_int:
                    bal[B] -= f
                if not want_jac:
                    continue
                w = 0.5 * c * chi2 * v * v * v * delta
                cv = c * v
                dA = -2.0 * w * delta / (h_r * h_r) - cv
                nnz = push(rows, cols, vals, nnz, A, A, dA, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, A, B, -dA, n_int, inv_area)
                if B < n_int:
                    nnz = push(rows, cols, vals, nnz, B, A, -dA, n_int, inv_area)
                    nnz = push(rows, cols, vals, nnz, B, B, dA, n_int, inv_area)
                if e == 0:
                    # center edge reads the tangential slope from ring 1 alone
                    dfd = 2.0 * w * t / (2.0 * h_t * sinh_ring[1])
                    nnz = push(rows, cols, vals, nnz, A, cjp, dfd, n_int, inv_area)
                    nnz = push(rows, cols, vals, nnz, A, cjm, -dfd, n_int, inv_area)
                    if B < n_int:
                        nnz = push(rows, cols, vals, nnz, B, cjp, -dfd, n_int, inv_area)
                        nnz = push(rows, cols, vals, nnz, B, cjm, dfd, n_int, inv_area)
                else:
                    coef_in = 1.0 / (4.0 * h_t * sinh_ring[e])
                    coef_out = 1.0 / (4.0 * h_t * sinh_ring[e + 1])
                    dfd = 2.0 * w * t * coef_in
                    nnz = push(rows, cols, vals, nnz, A, djp, dfd, n_int, inv_area)
                    nnz = push(rows, cols, vals, nnz, A, djm, -dfd, n_int, inv_area)
                    if B < n_int:
                        nnz = push(rows, cols, vals, nnz, B, djp, -dfd, n_int, inv_area)
                        nnz = push(rows, cols, vals, nnz, B, djm, dfd, n_int, inv_area)
                    dfd = 2.0 * w * t * coef_out
                    nnz = push(rows, cols, vals, nnz, A, cjp, dfd, n_int, inv_area)
                    nnz = push(rows, cols, vals, nnz, A, cjm, -dfd, n_int, inv_area)
                    if B < n_int:
                        nnz = push(rows, cols, vals, nnz, B, cjp, -dfd, n_int, inv_area)
                        nnz = push(rows, cols, vals, nnz, B, cjm, dfd, n_int, inv_area)

        # angular edges inside rings 1 .. n_r - 1
        for i in range(1, n_r):
            c = c_ang[i]
            chi2 = chi2_ang[i]
            for j in range(n_t):
                P = node_id(i, j, n_t)
                Q = node_id(i, j + 1, n_t)
                delta = u[Q] - u[P]
                dut = delta / (h_t * sinh_ring[i])
                up_j = node_id(i + 1, j, n_t)
                dn_j = node_id(i - 1, j, n_t)
                up_n = node_id(i + 1, j + 1, n_t)
                dn_n = node_id(i - 1, j + 1, n_t)
                rP = (u[up_j] - u[dn_j]) / (2.0 * h_r)
                rQ = (u[up_n] - u[dn_n]) / (2.0 * h_r)
                re = 0.5 * (rP + rQ)
                q = dut * dut + re * re
                m = 1.0 - chi2 * q
                if m < min_ang:
                    min_ang = m
                    worst_ang = 1 + (i - 1) * n_t + j
                v = 1.0 / sqrt(m if m > TINY else TINY)
                f = c * v * delta
                bal[P] += f
                bal[Q] -= f
                if not want_jac:
                    continue
                w = 0.5 * c * chi2 * v * v * v * delta
                cv = c * v
                dd = 2.0 * w * dut / (h_t * sinh_ring[i])
                dr = 2.0 * w * re / (4.0 * h_r)
                nnz = push(rows, cols, vals, nnz, P, P, -dd - cv, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, Q, P, dd + cv, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, P, Q, dd + cv, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, Q, Q, -dd - cv, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, P, up_j, dr, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, Q, up_j, -dr, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, P, dn_j, -dr, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, Q, dn_j, dr, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, P, up_n, dr, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, Q, up_n, -dr, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, P, dn_n, -dr, n_int, inv_area)
                nnz = push(rows, cols, vals, nnz, Q, dn_n, dr, n_int, inv_area)

    res_arr = np.empty(n_int)
    cdef double[::1] res = res_arr
    for i in range(n_int):
        res[i] = (bal[i] - 2.0 * H * srcint[i]) * inv_area[i]

    cdef double margin
    cdef Py_ssize_t worst
    if min_rad <= min_ang:
        margin = min_rad
        worst = worst_rad
    else:
        margin = min_ang
        worst = worst_ang

    if not want_jac:
        return res_arr, margin, worst, None
    return res_arr, margin, worst, (rows_arr[:nnz], cols_arr[:nnz], vals_arr[:nnz])
