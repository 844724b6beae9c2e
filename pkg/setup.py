from setuptools import Extension, setup

import numpy

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "mimosync._spkernel",
                ["src/mimosync/_spkernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-Python fallback kernel is selected at import time.
    extensions = []

setup(ext_modules=extensions)
