"""Build script for the optional compiled transient kernel.

The package works without the extension (a pure-numpy engine is selected at
import time); building it makes power sweeps roughly two orders of magnitude
faster.
"""

import os

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:  # pure-Python install still works
    ext_modules = []
else:
    if not os.path.exists("src/rfpa/_core/engine_cy.pyx"):
        cythonize = None
    if cythonize is None:
        ext_modules = []
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "rfpa._core.engine_cy",
                    ["src/rfpa/_core/engine_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API",
                                    "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
