"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-Python implementation of the
same kernels is selected at import time), so the build can be forced to skip
compilation with ONESIM_NO_EXT=1.
"""
import os

from setuptools import setup
from setuptools.extension import Extension

ext_modules = []
if os.environ.get("ONESIM_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "onesim.axelrod._fast",
                    ["src/onesim/axelrod/_fast.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
