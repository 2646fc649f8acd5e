"""Build script for the compiled SGD kernel.

The extension is optional at runtime: if the build (or import) fails, the
package falls back to the pure-numpy kernel in probe_bench._sgd_py.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "probe_bench._sgd",
                ["src/probe_bench/_sgd.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
