import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # Pure-python fallback kernels are selected at import time, so the
    # package still works without the compiled extension.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "schurmul._jacobi",
                ["src/schurmul/_jacobi.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
