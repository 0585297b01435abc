"""Precomputed finite-volume coefficient tables for a polar disk mesh.

Everything the assembly kernels need is reduced here to flat float arrays so
the compiled and the numpy backend consume identical inputs.  Cell balances
integrate fluxes over cell boundaries; conductances carry the metric factors:

  radial edge between rings e and e+1 (e = 0 is center -> ring 1):
      c_rad[e] = h_theta * sinh(s_{e+1/2}) * cosh(s_{e+1/2})^2 / h_r
  angular edge inside ring i:
      c_ang[i] = h_r * cosh(s_i)^2 / (sinh(s_i) * h_theta)

Cell areas and the source integrals int cosh(s) dA are exact, so the only
discretization error lives in the edge gradients and the midpoint rule.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GeomTables:
    n_r: int
    n_theta: int
    h_r: float
    h_theta: float
    sinh_ring: np.ndarray  # (n_r + 1,), sinh(i h_r); entry 0 unused
    s_first: float  # radius of ring 1, divisor for center-node gradients
    c_rad: np.ndarray  # (n_r,)
    chi2_rad: np.ndarray  # (n_r,) cosh(s_{e+1/2})^2
    c_ang: np.ndarray  # (n_r,), entry 0 unused
    chi2_ang: np.ndarray  # (n_r,) cosh(s_i)^2, entry 0 unused
    chi_node: np.ndarray  # (n_r + 1,) cosh(s_i) per ring, entry 0 is 1
    inv_area: np.ndarray  # (n_interior,)
    srcint: np.ndarray  # (n_interior,) integral of cosh(s) over the cell


def build_tables(mesh):
    n_r, n_t = mesh.n_r, mesh.n_theta
    h_r, h_t = mesh.h_r, mesh.h_theta

    s_ring = np.arange(n_r + 1) * h_r
    s_half = (np.arange(n_r) + 0.5) * h_r

    c_rad = h_t * np.sinh(s_half) * np.cosh(s_half) ** 2 / h_r
    chi2_rad = np.cosh(s_half) ** 2
    c_ang = np.zeros(n_r)
    chi2_ang = np.zeros(n_r)
    c_ang[1:] = h_r * np.cosh(s_ring[1:n_r]) ** 2 / (np.sinh(s_ring[1:n_r]) * h_t)
    chi2_ang[1:] = np.cosh(s_ring[1:n_r]) ** 2

    n_int = 1 + (n_r - 1) * n_t
    area = np.empty(n_int)
    srcint = np.empty(n_int)
    area[0] = 2.0 * np.pi * (np.cosh(h_r / 2.0) - 1.0)
    srcint[0] = np.pi * np.sinh(h_r / 2.0) ** 2
    ring_area = h_t * (np.cosh(s_ring[1:n_r] + h_r / 2) - np.cosh(s_ring[1:n_r] - h_r / 2))
    ring_src = 0.5 * h_t * (
        np.sinh(s_ring[1:n_r] + h_r / 2) ** 2 - np.sinh(s_ring[1:n_r] - h_r / 2) ** 2
    )
    area[1:] = np.repeat(ring_area, n_t)
    srcint[1:] = np.repeat(ring_src, n_t)

    return GeomTables(
        n_r=n_r,
        n_theta=n_t,
        h_r=h_r,
        h_theta=h_t,
        sinh_ring=np.sinh(s_ring),
        s_first=h_r,
        c_rad=c_rad,
        chi2_rad=chi2_rad,
        c_ang=c_ang,
        chi2_ang=chi2_ang,
        chi_node=np.cosh(s_ring),
        inv_area=1.0 / area,
        srcint=srcint,
    )
