"""Numba/NumPy backend switch.

Kernels in :mod:`qdres.kernels` are written twice: a ``@njit`` loop version
and a vectorised NumPy version.  Set ``QDRES_DISABLE_NUMBA=1`` before import
to force the NumPy path (also used automatically when numba is missing).
"""

import os

_FLAG = os.environ.get("QDRES_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    if NUMBA_DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True``, or a no-op when numba is off."""
    kwargs.setdefault("cache", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return _njit(*args, **kwargs)


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
