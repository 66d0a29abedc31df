"""Numba switch.

Hot kernels are written twice: an ``@njit`` loop version and a vectorised
numpy version. ``ARTIFACT_NUMBA=0`` in the environment (or numba missing) makes
the dispatchers pick the numpy path. Both paths must produce identical
results; ``tests/test_kernels.py`` checks that.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("ARTIFACT_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(func):
        return func

    return decorator


if HAVE_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
