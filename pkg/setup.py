import os

from setuptools import Extension, setup

# The compiled replay kernel is optional: without it the package falls back
# to the pure-Python backend at import time (slower, same results).
ext_modules = []
if os.environ.get("EDGEDISPATCH_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "edgedispatch._ledgercore",
                    ["src/edgedispatch/_ledgercore.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
