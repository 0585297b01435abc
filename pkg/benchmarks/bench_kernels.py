"""Assembly backend benchmark: compiled kernels vs the numpy reference.

Times residual-only and residual+Jacobian assembly on a few mesh sizes, plus
one full Newton solve per backend. Run as  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from adscmc import _kernels, boundary
from adscmc._kernels import build_tables, numpy_backend
from adscmc.mesh import build_mesh
from adscmc.solver import boundary_values, exact_umbilic, solve

try:
    from adscmc._kernels import cykernels
except ImportError:
    cykernels = None


def _time(fn, min_time=0.4):
    fn()  # warm up
    n, t0 = 0, time.perf_counter()
    while time.perf_counter() - t0 < min_time:
        fn()
        n += 1
    return (time.perf_counter() - t0) / n


def bench_assembly():
    print(f"active backend: {_kernels.BACKEND}")
    backends = [("numpy", numpy_backend)]
    if cykernels is not None:
        backends.append(("cython", cykernels))
    for n_r, n_t in ((32, 64), (64, 128), (128, 256)):
        mesh = build_mesh(3.0, n_r, n_t)
        g = build_tables(mesh)
        u = exact_umbilic(0.3, mesh).u
        u = u + 1e-3 * np.cos(2 * mesh.angles()) / np.cosh(mesh.radii())
        print(f"\nmesh {n_r} x {n_t} ({mesh.n_interior} unknowns)")
        for label, mod in backends:
            t_res = _time(lambda: mod.assemble(u, 0.3, g, False))
            t_jac = _time(lambda: mod.assemble(u, 0.3, g, True))
            print(f"  {label:7s} residual {t_res * 1e3:8.3f} ms   +jacobian {t_jac * 1e3:8.3f} ms")


def bench_solve():
    mesh = build_mesh(3.0, 64, 128)
    gamma = boundary.make_quasicircle(boundary.trig_map(0.2, 2))
    bc = boundary_values(gamma, mesh, H=0.5)
    print(f"\nfull solve, mesh 64 x 128, H = 0.5 (backend: {_kernels.BACKEND})")
    t = _time(lambda: solve(mesh, bc, 0.5), min_time=1.0)
    print(f"  {t * 1e3:8.1f} ms per solve")


if __name__ == "__main__":
    bench_assembly()
    bench_solve()
