"""Build script for the optional compiled kernels.

The package works without the extension: hopcheck.kernels falls back to
the pure-Python twin when the compiled module is missing. Set
HOPCHECK_SKIP_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("HOPCHECK_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/hopcheck/_kernels.pyx"],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
