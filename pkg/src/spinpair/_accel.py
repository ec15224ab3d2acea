"""Backend selection for the compiled kernels.

Set ``SPINPAIR_NO_JIT=1`` to force the pure-numpy path. The flag is read once at
import time; switching backends inside a running process is not supported.
"""
import os

_FLAG = os.environ.get("SPINPAIR_NO_JIT", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    USE_NUMBA = True
except ImportError:
    _njit = None
    USE_NUMBA = False


def jit(func):
    """Compile ``func`` with numba when the JIT backend is active."""
    if USE_NUMBA:
        return _njit(cache=True)(func)
    return func


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
