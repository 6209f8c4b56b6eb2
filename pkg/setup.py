"""Build script: compiles the fixed-point solver kernel when Cython is available.

The package is fully functional without the extension; rfsetsim.kernels falls
back to the pure-Python implementation at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rfsetsim.kernels._fixedpoint",
                ["src/rfsetsim/kernels/_fixedpoint.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
