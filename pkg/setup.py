import os

import numpy as np
from setuptools import Extension, setup

# LUGRE_LAB_PURE=1 skips the compiled kernel; the package then runs on the
# pure-Python fallback.
ext_modules = []
if not os.environ.get("LUGRE_LAB_PURE"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "lugre_lab._ckernel",
                ["src/lugre_lab/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
