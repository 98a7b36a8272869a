"""Optional numba acceleration.

Hot loops in :mod:`robustmc._kernels` are decorated with :func:`njit` from
this module.  Setting ``ROBUSTMC_DISABLE_NUMBA=1`` in the environment (or
running without numba installed) turns the decorator into a no-op and the
kernels dispatch to their pure-numpy implementations instead.
"""
import os

_DISABLED = os.environ.get("ROBUSTMC_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba as _numba
except ImportError:  # pragma: no cover - exercised via env flag in benchmarks
    _numba = None

USE_NUMBA = _numba is not None

numba_default = {
    "nopython": True,
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "error_model": "numpy",
}


def njit(func=None, **overrides):
    """``numba.njit`` with package defaults, or identity when disabled."""
    opts = dict(numba_default, **overrides)

    def wrap(f):
        if not USE_NUMBA:
            return f
        return _numba.jit(**opts)(f)

    if func is None:
        return wrap
    return wrap(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
