"""Build the optional compiled tape kernel.

The package works without it (a pure-Python kernel is selected at import);
set ``DPL_NO_EXTENSION=1`` to skip compilation.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("DPL_NO_EXTENSION"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "dpl._tape_ext",
                    ["src/dpl/_tape_ext.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
