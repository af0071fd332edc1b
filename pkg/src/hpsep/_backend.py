"""Kernel backend selection.

The compiled ``_ckernels`` module is used when importable; set
``HPSEP_PURE_PYTHON=1`` to force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _pykernels as python_kernels

if os.environ.get("HPSEP_PURE_PYTHON") == "1":
    kernels = python_kernels
    compiled_kernels = None
else:
    try:
        from . import _ckernels as compiled_kernels
    except ImportError:  # extension not built
        compiled_kernels = None
        kernels = python_kernels
    else:
        kernels = compiled_kernels

BACKEND = kernels.BACKEND


def available_backends():
    """Return the mapping name -> kernel module for every importable backend."""
    out = {"python": python_kernels}
    if compiled_kernels is not None:
        out["cython"] = compiled_kernels
    return out
