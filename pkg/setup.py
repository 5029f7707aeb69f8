from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "mdrq._kernels_cy",
        ["src/mdrq/_kernels_cy.pyx"],
        extra_compile_args=["-O3", "-march=native"],
    )
]

if cythonize is not None:
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
else:
    # Without Cython the package still installs; mdrq.kernels falls back to
    # the pure-Python implementations at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
