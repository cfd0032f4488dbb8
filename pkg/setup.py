"""Build script for the optional compiled Monte-Carlo kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); building it just makes the trial loop faster.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build still works, pure Python only
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "dlczsim._kernels._mc",
                sources=["src/dlczsim/_kernels/_mc.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
