"""Switch between numba-compiled kernels and the plain Python reference path.

Set ``SOCIALOVERLAY_NUMBA=0`` in the environment (before import) to run every
hot loop through the reference implementations instead of the jitted kernels.
Results are identical either way; only speed differs.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("SOCIALOVERLAY_NUMBA", "1") != "0"


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise an identity decorator."""
    if USE_NUMBA:
        return numba.njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(func):
        return func

    return decorator
