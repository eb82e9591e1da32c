"""Numeric backend selection.

Hot kernels ship in two interchangeable implementations: numba @njit loops
and vectorized pure numpy. The active one is picked once at import time from
the WATTROUTE_BACKEND environment variable ("numba" or "numpy"); unset means
numba when importable, numpy otherwise.
"""

import os

_VALID = ("numba", "numpy")

try:
    import numba  # noqa: F401

    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False


def _select() -> str:
    requested = os.environ.get("WATTROUTE_BACKEND", "").strip().lower()
    if requested:
        if requested not in _VALID:
            raise ValueError(
                f"WATTROUTE_BACKEND must be one of {_VALID}, got {requested!r}"
            )
        if requested == "numba" and not _HAVE_NUMBA:
            raise ValueError("WATTROUTE_BACKEND=numba but numba is not importable")
        return requested
    return "numba" if _HAVE_NUMBA else "numpy"


ACTIVE_BACKEND = _select()


def active_backend() -> str:
    """Name of the kernel backend selected for this process."""
    return ACTIVE_BACKEND


def have_numba() -> bool:
    return _HAVE_NUMBA
