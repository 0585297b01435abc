"""Build hook for the optional compiled kernels.

The Cython extension adscmc._kernels.cykernels accelerates residual and
Jacobian assembly.  It is strictly optional: if Cython or a C compiler is
missing, or the compile fails, the install proceeds and the package falls back
to the numpy implementation at import time.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("ADSCMC_NO_EXTENSION") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "adscmc._kernels.cykernels",
                    ["src/adscmc/_kernels/cykernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except Exception as exc:  # pragma: no cover - depends on build host
        print(f"adscmc: skipping compiled kernels ({exc}); numpy fallback will be used")

try:
    setup(ext_modules=ext_modules)
except SystemExit:  # pragma: no cover - compiler present but broken
    if ext_modules:
        print("adscmc: compiled kernel build failed; retrying as pure python")
        setup(ext_modules=[])
    else:
        raise
