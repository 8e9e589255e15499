"""Build script: compiles the chain kernel extension when Cython is available.

The package works without the extension (a pure-Python kernel is selected at
import time), so a failed extension build is downgraded to a warning.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import os

    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    npyrandom_dir = os.path.join(os.path.dirname(numpy.__file__), "random", "lib")
    ext_modules = cythonize(
        [
            Extension(
                "gibbsim._kernels._cychain",
                ["src/gibbsim/_kernels/_cychain.pyx"],
                include_dirs=[numpy.get_include()],
                library_dirs=[npyrandom_dir],
                libraries=["npyrandom"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -ffp-contract=off keeps the compiled kernel bit-identical to
                # the pure-Python fallback (no fused multiply-add contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    sys.stderr.write(f"warning: building without compiled kernel ({exc})\n")

setup(ext_modules=ext_modules)
