"""Backend selection for the hot kernels.

Numba is used when importable unless ``TCMKIT_DISABLE_NUMBA`` is set to a
truthy value, in which case the vectorized numpy implementations run instead.
"""

from __future__ import annotations

import os

_FLAG = "TCMKIT_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()


def njit(func):
    """``numba.njit(cache=True, nogil=True)`` when numba is available, else identity."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
