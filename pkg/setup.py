"""Build script for the optional compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes the hot loops fast. `optional=True`
lets installation proceed on machines without a C toolchain.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "herbar._kernels._native",
                ["src/herbar/_kernels/_native.pyx"],
                # -ffp-contract=off: the numpy fallback must stay bit-identical,
                # so fused multiply-add contraction is disabled.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
