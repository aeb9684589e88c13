import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -O3 only: -ffast-math would break the NaN checks and bit-level determinism.
extensions = [
    Extension(
        "bibow.kernels._inner",
        ["src/bibow/kernels/_inner.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
