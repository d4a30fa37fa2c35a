"""Builds the compiled assignment kernel; the package still works without it."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("EDGETREE_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("edgetree.allocator._kernel", ["src/edgetree/allocator/_kernel.pyx"],
                       include_dirs=[numpy.get_include()],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
