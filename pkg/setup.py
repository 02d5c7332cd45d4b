import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install, the fallback kernels are used
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("SLGEO_NO_EXT"):
    ext = Extension(
        "slgeo._ckernels",
        sources=["src/slgeo/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-fopenmp"],
        extra_link_args=["-fopenmp"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3, compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True})

setup(ext_modules=ext_modules)
