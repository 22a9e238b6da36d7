"""Numba toggle.

Set ``EDMLAB_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is importable. The flag is read once, at import time.
"""

import os

_FLAG = os.environ.get("EDMLAB_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if NUMBA_AVAILABLE:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def is_jitted(func) -> bool:
    """True if ``func`` is a numba dispatcher that compiled kernels can call."""
    if not NUMBA_AVAILABLE:
        return False
    from numba.core.registry import CPUDispatcher

    return isinstance(func, CPUDispatcher)
