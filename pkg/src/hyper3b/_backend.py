"""Kernel backend selection: compiled core if importable, else pure Python.

Set HYPER3B_BACKEND=python to force the fallback.
"""
import os

from . import _core_py

BACKEND = "python"
kernels = _core_py

if os.environ.get("HYPER3B_BACKEND", "").lower() != "python":
    try:
        from . import _core as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        kernels = _core_py
        BACKEND = "python"

dsum = kernels.dsum
dsum_array = kernels.dsum_array
sphere_inner = kernels.sphere_inner
poly_mul = kernels.poly_mul
