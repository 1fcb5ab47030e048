"""Build the optional Cython kernels.

The package works without the compiled extension (a numpy fallback is
selected at import time), so a failed extension build is non-fatal.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "psychfit._kernels._core",
                ["src/psychfit/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level="3",
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
