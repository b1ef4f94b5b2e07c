"""Backend switch for the hot numeric kernels.

Every kernel in :mod:`rdagraph._kernels` has a numba ``@njit`` version and a
vectorised numpy version. The numba path is used when numba imports cleanly
and ``RDAGRAPH_DISABLE_NUMBA`` is unset (or ``0``). Both paths must agree to
floating-point round-off; ``tests/test_kernels.py`` checks that.
"""

import os

_FLAG = os.environ.get("RDAGRAPH_DISABLE_NUMBA", "0").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG in ("", "0", "false", "no")


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
