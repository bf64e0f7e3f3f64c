"""
Numba switch.

Hot kernels exist twice: a compiled loop version and a vectorised numpy
version.  Which one runs is decided by ``HOTSPOTS_DISABLE_JIT`` at import
time (``1``/``true``/``yes`` selects numpy) and can be flipped at runtime
with :func:`set_backend`.  When numba cannot be imported the numpy path is
always used.
"""
import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

_FALSY = {"", "0", "false", "no", "off"}

_backend = (
    "numba"
    if HAS_NUMBA and os.environ.get("HOTSPOTS_DISABLE_JIT", "0").strip().lower() in _FALSY
    else "numpy"
)


def njit(func):
    """Compile ``func`` in nopython mode, or return it untouched without numba."""
    if HAS_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def backend():
    return _backend


def use_numba():
    return _backend == "numba"


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` for every kernel dispatch."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not importable in this environment")
    _backend = name
