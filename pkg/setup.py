"""Build script: compiles the optional native kernel extension.

The package works without the extension (a pure-Python fallback is
selected at import time); set CAGKIT_SKIP_NATIVE=1 to skip compilation.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CAGKIT_SKIP_NATIVE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "cagkit.kernels._native",
                    ["src/cagkit/kernels/_native.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
