"""Build the optional compiled kernels.

The Cython extension is best effort: if Cython or a C compiler is missing the
package still installs and ``heraldkit.kernels`` falls back to pure Python.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("HERALDKIT_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "heraldkit._ckernels",
                    ["src/heraldkit/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
