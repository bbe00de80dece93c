"""Pick the simulation kernel at import time.

The compiled kernel is used when it was built; otherwise the pure-Python one.
``LUGRE_LAB_BACKEND=python`` forces the fallback and ``=cython`` makes a
missing extension an error instead of a silent downgrade.
"""
import importlib
import os

from . import _pykernel


def load(name=None):
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name == "python":
        return _pykernel
    if name == "cython":
        return importlib.import_module("lugre_lab._ckernel")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


_requested = os.environ.get("LUGRE_LAB_BACKEND", "").strip().lower()
if _requested == "python":
    kernel = _pykernel
elif _requested == "cython":
    kernel = load("cython")
else:
    try:
        kernel = load("cython")
    except ImportError:
        kernel = _pykernel

BACKEND = kernel.NAME
