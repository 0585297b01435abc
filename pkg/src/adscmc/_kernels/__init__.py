"""Assembly kernel dispatch: compiled core when built, numpy otherwise.

Set ADSCMC_FORCE_NUMPY=1 to pin the fallback (parity tests and benchmarks
use this to compare the two implementations on identical inputs).
"""

import os

from . import numpy_backend
from .tables import GeomTables, build_tables

BACKEND = "numpy"
_impl = numpy_backend

if not os.environ.get("ADSCMC_FORCE_NUMPY"):
    try:
        from . import cykernels as _cy
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        _impl = _cy


def assemble(u, H, tables, want_jac):
    return _impl.assemble(u, H, tables, want_jac)


def node_margins(u, tables):
    # reporting path, not hot: always the vectorized version
    return numpy_backend.node_margins(u, tables)


__all__ = ["BACKEND", "GeomTables", "build_tables", "assemble", "node_margins"]
