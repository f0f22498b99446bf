"""Build hook: compile the Cython core when possible, otherwise ship pure Python."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("HYPER3B_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("hyper3b._core", ["src/hyper3b/_core.pyx"], extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
            quiet=True,
        )
    except Exception as exc:  # no compiler or no Cython: fallback is selected at import
        print(f"hyper3b: building without compiled core ({exc})")

setup(ext_modules=ext_modules)
