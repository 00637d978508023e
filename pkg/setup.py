"""Build script for the optional compiled propagation kernels.

The package works without the extension (a numpy fallback is selected at
import time), so a missing compiler or Cython only costs speed, not
functionality.
"""

import sys

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "qflip._kernels._core",
        sources=["src/qflip/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError as exc:
    sys.stderr.write(
        "qflip: skipping compiled kernels (%s); using pure-python fallback\n" % exc
    )

setup(ext_modules=ext_modules)
