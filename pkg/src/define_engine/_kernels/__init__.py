"""Numeric kernel dispatch: compiled extension with a pure-numpy fallback.

The compiled module (`_ckern`, built from Cython) is preferred when it
imported cleanly; otherwise the numpy implementations in `_pykern` are used.
Set DEFINE_KERNELS=python or DEFINE_KERNELS=c to force a backend at import
time (forcing "c" when the extension is missing falls back with a warning).
Tests and benchmarks can switch at runtime via `use_backend`.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

from . import _pykern

_BACKENDS = {"python": _pykern}
try:
    from . import _ckern

    _BACKENDS["c"] = _ckern
except ImportError:
    pass


def _initial_backend() -> str:
    requested = os.environ.get("DEFINE_KERNELS", "").strip().lower()
    if requested:
        if requested in _BACKENDS:
            return requested
        warnings.warn(
            f"DEFINE_KERNELS={requested!r} unavailable; using pure-python kernels",
            RuntimeWarning,
        )
        return "python"
    return "c" if "c" in _BACKENDS else "python"


_ACTIVE = _initial_backend()


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def backend_name() -> str:
    return _ACTIVE


def use_backend(name: str) -> None:
    global _ACTIVE
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; have {available_backends()}")
    _ACTIVE = name


def _matrix(a, rows: int | None = None) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {out.shape}")
    if rows is not None and out.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {out.shape[0]}")
    return out


def _vector(a, size: int | None = None) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 1:
        raise ValueError(f"expected a 1-d array, got shape {out.shape}")
    if size is not None and out.shape[0] != size:
        raise ValueError(f"expected length {size}, got {out.shape[0]}")
    return out


def accumulate_outer(winners, losers) -> np.ndarray:
    """Summed winner-by-loser outer products with a zeroed diagonal."""
    w = _matrix(winners)
    l = _matrix(losers, rows=w.shape[0])
    if w.shape[1] != l.shape[1]:
        raise ValueError("winner and loser rows must have the same width")
    if w.shape[0] == 0:
        return np.zeros((w.shape[1], w.shape[1]))
    return _BACKENDS[_ACTIVE].accumulate_outer(w, l)


def bt_fit_loop(w, p0, tol: float, max_iter: int) -> tuple[np.ndarray, int, float]:
    """Run the pairwise-strength minorization loop; see _pykern.bt_fit_loop."""
    w = _matrix(w)
    p0 = _vector(p0, size=w.shape[0])
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    return _BACKENDS[_ACTIVE].bt_fit_loop(w, p0, float(tol), int(max_iter))


def kl_rows(target, corpus) -> np.ndarray:
    """Divergence of target from each corpus row; see _pykern.kl_rows."""
    t = _vector(target)
    c = _matrix(corpus)
    if c.shape[1] != t.shape[0]:
        raise ValueError("corpus width must match target length")
    if c.shape[0] == 0:
        return np.zeros(0)
    return _BACKENDS[_ACTIVE].kl_rows(t, c)
