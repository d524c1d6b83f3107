"""Build script for the optional compiled event kernel.

The package works without the extension; ``kindsim.kernels`` falls back to
the pure-Python kernel when ``kindsim._ckernel`` cannot be imported.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("KINDSIM_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "kindsim._ckernel",
                    ["src/kindsim/_ckernel.pyx"],
                    include_dirs=[np.get_include()],
                    # fp contraction would break bitwise agreement with the
                    # pure-Python kernel
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
