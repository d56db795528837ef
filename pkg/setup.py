"""Build script: compiles the optional simplex hot-loop extension.

The package works without the extension (a pure numpy twin of every
kernel is selected at import time), so a failed compile only costs speed.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension best-effort; fall back to pure Python on failure."""

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # compiler missing, cython missing, ...
            print(f"warning: building {ext.name} failed ({exc}); "
                  "using pure-Python kernels")


def extensions():
    if os.environ.get("NETSLICE_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "netslice.lp._speedups",
        ["src/netslice/lp/_speedups.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
