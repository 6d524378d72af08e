# Builds the compiled kernel extension. The package still works without it:
# ltboost._kernels falls back to the numpy backend when the extension is
# missing, so a pure-Python install (no compiler) remains functional.
from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "ltboost._kernels._core",
                sources=["src/ltboost/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
