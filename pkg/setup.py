import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "preschwarz._kernels",
        ["src/preschwarz/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

# The extension is optional: preschwarz falls back to numpy kernels when it
# is missing, so a failed compile must not break the install.
setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
