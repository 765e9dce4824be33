"""Backend switch for the numeric kernels.

Kernels come in two flavours: explicit loops compiled with numba, and a
vectorised numpy fallback. The numba path is used when numba imports and
``GQLCOST_DISABLE_JIT`` is unset (or ``0``).
"""
from __future__ import annotations

import os
from contextlib import contextmanager

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional speedup
    numba = None

HAVE_NUMBA = numba is not None
_backend = "numpy" if (not HAVE_NUMBA or os.environ.get("GQLCOST_DISABLE_JIT", "0") not in ("", "0")) else "numba"


def njit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
