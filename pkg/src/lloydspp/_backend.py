"""Kernel backend selection.

The compiled ``_ckernels`` module is used when it imports; otherwise the numpy
twin in ``_pykernels`` takes over. Set ``LLOYDSPP_BACKEND=python`` to force the
fallback (handy for benchmarking and for checking the two agree).
"""

import importlib
import os
import warnings

from . import _pykernels

_requested = os.environ.get("LLOYDSPP_BACKEND", "auto").lower()

if _requested == "python":
    kernels = _pykernels
else:
    try:
        kernels = importlib.import_module("lloydspp._ckernels")
    except ImportError:
        if _requested == "cython":
            raise
        warnings.warn("compiled kernels unavailable; using the numpy fallback",
                      RuntimeWarning, stacklevel=2)
        kernels = _pykernels

BACKEND = kernels.BACKEND


def load(name):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _pykernels
    return importlib.import_module("lloydspp._ckernels")
