"""Build script: compiles the optional tridiagonal stepping kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); compilation failures therefore downgrade to a
warning instead of aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "lattice_lab._kernels._native",
                ["src/lattice_lab/_kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - depends on toolchain
    sys.stderr.write(
        f"lattice-lab: skipping compiled kernels ({exc!r}); "
        "the pure-NumPy fallback will be used\n"
    )

setup(ext_modules=ext_modules)
