import os

import numpy
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to pure
# numpy/scipy implementations when the extension is absent.
ext_modules = []
if os.path.exists("src/lfsmesh/_kernels.pyx"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "lfsmesh._kernels",
                    ["src/lfsmesh/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
