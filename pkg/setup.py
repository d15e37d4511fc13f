"""Build script: compiles the Cython kernel core.

The extension is optional at runtime -- mergeforge falls back to the
NumPy kernel lane when the compiled module is missing (see
mergeforge/kernels/__init__.py).
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "mergeforge.kernels._core",
        ["src/mergeforge/kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions, compiler_directives={"language_level": "3"}
    )
)
