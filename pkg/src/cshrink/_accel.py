"""Optional numba acceleration.

Kernels are written once in a numba-compatible subset of numpy.  When numba
is importable and ``CSHRINK_DISABLE_NUMBA`` is unset (or "0"), they are
compiled with ``numba.njit``; otherwise the same source runs as plain numpy.
"""
import os

_FALSEY = {"", "0", "false", "no", "off"}


def _numba_requested():
    return os.environ.get("CSHRINK_DISABLE_NUMBA", "").strip().lower() in _FALSEY


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and _numba_requested()


def jit(fn):
    """njit ``fn`` when acceleration is on; otherwise return it unchanged.

    The uncompiled function is always reachable as ``fn.py_func``.
    """
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn
