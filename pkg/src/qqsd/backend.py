"""Optional numba acceleration for the hot kernels.

The compiled path is the default whenever numba imports; setting the
environment variable ``QQSD_NO_NUMBA=1`` (before import) forces the pure-numpy
fallback.  Both paths stay importable so they can be benchmarked against each
other (see benchmarks/bench_backends.py).
"""

import os

_flag = os.environ.get("QQSD_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in {"1", "true", "yes", "on"}

try:
    import numba  # noqa: F401
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def default_backend() -> str:
    return "numba" if (HAVE_NUMBA and not NUMBA_DISABLED) else "numpy"


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend '{backend}'")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend
