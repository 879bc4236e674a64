import os
import sys

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


def _openmp_flags():
    if os.environ.get("COARSEFORGE_NO_OPENMP") or sys.platform == "darwin":
        return [], []
    return ["-fopenmp"], ["-fopenmp"]


compile_flags, link_flags = _openmp_flags()

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "coarseforge._core",
        ["src/coarseforge/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"] + compile_flags,
        extra_link_args=link_flags,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )

setup(ext_modules=ext_modules)
