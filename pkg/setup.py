"""Build script for the optional compiled join kernels.

The package works without the extension (a pure-numpy twin is selected at
import time); set FIBERALIGN_SKIP_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("FIBERALIGN_SKIP_EXT"):
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fiberalign._joinkern_c",
                ["src/fiberalign/_joinkern_c.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
