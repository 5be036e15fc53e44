"""Build script for the compiled Hamming-distance core.

The extension is optional: if Cython (or a C compiler) is unavailable the
package still installs and falls back to the pure-numpy kernels at import
time (see taghash.retrieval).
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/taghash/_hamming.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
