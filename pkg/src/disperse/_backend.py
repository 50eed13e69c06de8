"""Numba availability and backend selection.

Set ``DISPERSE_NO_NUMBA=1`` to force the pure-numpy kernels even when numba
is installed. The choice is read once at import time.
"""
from __future__ import annotations

import functools
import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on environment
    numba = None
    NUMBA_AVAILABLE = False


def _env_disabled() -> bool:
    return os.environ.get("DISPERSE_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = NUMBA_AVAILABLE and not _env_disabled()


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""

    def wrap(f):
        if NUMBA_AVAILABLE:
            return numba.njit(cache=True, **kwargs)(f)

        @functools.wraps(f)
        def passthrough(*args, **kw):
            return f(*args, **kw)

        return passthrough

    if func is not None:
        return wrap(func)
    return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
