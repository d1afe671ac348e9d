import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "tailcast.kernels._ckernels",
                ["src/tailcast/kernels/_ckernels.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython at build time: the package still works via the NumPy fallback.
    ext_modules = []

setup(ext_modules=ext_modules)
