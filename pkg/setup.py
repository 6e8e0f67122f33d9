"""Builds the optional Cython evaluator.

The package is pure Python; if Cython (or a C compiler) is unavailable the
extension is skipped and the interpreter falls back to the pure evaluator.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("STAIRCASE_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/staircase/interp/_evalcy.pyx"],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
