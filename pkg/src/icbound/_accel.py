"""Backend selection for the hot numeric kernels.

Set ``ICBOUND_BACKEND=numpy`` or ``numba`` to force one code path everywhere.
The default ``auto`` uses numba when it imports cleanly, except for kernels
that opt out because the numpy version benchmarks faster.
"""
from __future__ import annotations

import os

try:
    import numba
    from numba import njit, prange

    # the image's TBB is too old for numba; skip it instead of warning at first launch
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba ships in the test image
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    prange = range


def backend() -> str:
    """Return the backend name currently in effect ("numba" or "numpy")."""
    choice = os.environ.get("ICBOUND_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"ICBOUND_BACKEND must be auto, numba or numpy, got {choice!r}")
    if choice == "numpy" or not HAVE_NUMBA:
        return "numpy"
    return "numba"


def use_numba(auto: bool = True) -> bool:
    """Whether to take the numba path; ``auto`` is this kernel's choice under ``auto``."""
    if backend() == "numpy":
        return False
    if os.environ.get("ICBOUND_BACKEND", "auto").strip().lower() == "numba":
        return True
    return auto


__all__ = ["HAVE_NUMBA", "backend", "use_numba", "njit", "prange"]
