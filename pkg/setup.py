"""Build script for the compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), but the Cython build is attempted by default so installs get
the fast path. ``-ffp-contract=off`` keeps the native float arithmetic
bit-identical to the numpy backend.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "matcast.kernels._native",
        ["src/matcast/kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
