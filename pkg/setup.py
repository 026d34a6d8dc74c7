import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # sdist consumers without Cython get the numpy fallback
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("VIDEOSHIELD_NO_EXT") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "videoshield.tensorcore._kernels",
                ["src/videoshield/tensorcore/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
