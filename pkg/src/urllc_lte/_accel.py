"""JIT switch for the hot kernels.

Numba is used when importable unless ``URLLC_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel dispatches to its pure-numpy twin.
Both variants stay importable so tests and benchmarks can compare them.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("URLLC_DISABLE_NUMBA", "").strip().lower()

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func=None, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("error_model", "numpy")

    def wrap(f):
        if HAVE_NUMBA:
            return _numba_njit(**kwargs)(f)
        return f

    if func is not None:
        return wrap(func)
    return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
