import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ECHOSLICE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "echoslice.kernels._trilinear",
                    ["src/echoslice/kernels/_trilinear.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # Pure-python kernels are selected at import time when the
        # extension is unavailable.
        ext_modules = []

setup(ext_modules=ext_modules)
