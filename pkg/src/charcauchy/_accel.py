"""Backend selection for the hot kernels.

Set ``CHARCAUCHY_NUMBA=0`` to force the pure-numpy path. ``CHARCAUCHY_THREADS``
caps the worker count used by the thread pools in :mod:`charcauchy.verify`.
"""
import os

_FLAG = os.environ.get("CHARCAUCHY_NUMBA", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")


def njit(func):
    """``numba.njit(cache=True)`` when the numba backend is active, identity otherwise."""
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def max_workers():
    raw = os.environ.get("CHARCAUCHY_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


if USE_NUMBA and os.environ.get("CHARCAUCHY_THREADS"):
    try:
        numba.set_num_threads(min(max_workers(), numba.config.NUMBA_NUM_THREADS))
    except (ValueError, AttributeError):  # pragma: no cover
        pass
