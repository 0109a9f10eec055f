"""Builds the optional compiled kernels.

The package is fully functional without the extension: the kernel dispatcher
falls back to the numpy implementations when the compiled module is absent.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "define_engine._kernels._ckern",
                ["src/define_engine/_kernels/_ckern.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
