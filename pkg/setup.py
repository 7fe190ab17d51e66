"""Build script: compiles the optional Cython stepper core.

The extension is marked optional; if no compiler or Cython is available the
package installs anyway and falls back to the pure-numpy stepper at import.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "delayadm._kernels._stepper_c",
                ["src/delayadm/_kernels/_stepper_c.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
