"""Numba switch.

Hot kernels are written twice: an ``@njit`` loop version and a vectorised
numpy version. ``PCWLATTICE_DISABLE_NUMBA=1`` (or a missing numba) selects
the numpy path globally; individual calls may still pass ``backend=``.
"""
import os

_FALSE = {"", "0", "false", "no", "off"}

try:
    import numba  # noqa: F401
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    _njit = None

NUMBA_DISABLED = os.environ.get("PCWLATTICE_DISABLE_NUMBA", "0").strip().lower() not in _FALSE
USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED

BACKENDS = ("numba", "numpy")


def default_backend():
    return "numba" if USE_NUMBA else "numpy"


def resolve_backend(backend=None):
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True``; identity decorator without numba."""
    if _njit is None:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    if len(args) == 1 and callable(args[0]):
        return _njit(**kwargs)(args[0])
    return _njit(*args, **kwargs)
