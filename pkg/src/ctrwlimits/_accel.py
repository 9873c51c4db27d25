"""Numba toggle.

Set ``CTRWLIMITS_NO_NUMBA=1`` before import to run every hot kernel through
its pure-numpy implementation instead of the compiled one.
"""

import os

_FLAG = os.environ.get("CTRWLIMITS_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


def njit(func=None, **options):
    """``numba.njit`` when available, otherwise the identity decorator.

    Compilation happens regardless of the env flag so the benchmark can
    compare both paths in one process; the flag only changes dispatch.
    """
    options.setdefault("cache", True)

    def wrap(f):
        if not HAVE_NUMBA:
            return f
        return numba.njit(**options)(f)

    if func is None:
        return wrap
    return wrap(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
