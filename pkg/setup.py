"""Optional compiled kernels; the package falls back to numpy when the build is unavailable."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("NESYDFA_NO_EXT", "0") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("nesydfa._kernels._belief", ["src/nesydfa/_kernels/_belief.pyx"],
                       include_dirs=[np.get_include()],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
