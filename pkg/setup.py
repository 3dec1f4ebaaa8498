import numpy
from setuptools import setup, Extension
from Cython.Build import cythonize

ext = Extension(
    "remas._kernels._core",
    ["src/remas/_kernels/_core.pyx"],
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3"],
)

setup(ext_modules=cythonize([ext], language_level=3))
