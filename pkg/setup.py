import numpy as np
from setuptools import Extension, setup

ext = Extension(
    "spinramsey.kernels._fast",
    sources=["src/spinramsey/kernels/_fast.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)
# the package falls back to the NumPy kernels when the extension is missing
ext.optional = True

try:
    from Cython.Build import cythonize

    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
