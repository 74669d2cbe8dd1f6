import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "lpnet.backends._ckernels",
    ["src/lpnet/backends/_ckernels.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-march=native"],
)

setup(ext_modules=cythonize([ext], language_level=3))
