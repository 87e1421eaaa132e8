import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "moatlab._ckernel",
    ["src/moatlab/_ckernel.pyx"],
    language="c++",
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3"],
)

setup(ext_modules=cythonize([ext], language_level=3))
