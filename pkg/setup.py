import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("TRIPLEALIGN_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "triplealign._l1knn",
                    ["src/triplealign/_l1knn.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython available: the package falls back to the numpy kernels.
        ext_modules = []

setup(ext_modules=ext_modules)
