"""Numba switch.

Hot loops are compiled with numba when it is importable. Setting the
environment variable ``SSRC_DISABLE_NUMBA=1`` before import selects the
pure-numpy implementations instead.
"""
import os

_FLAG = os.environ.get("SSRC_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in {"1", "true", "yes", "on"}


def njit(fn):
    """Compile ``fn`` in nopython mode if numba is installed, else return it unchanged."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
