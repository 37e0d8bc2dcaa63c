"""Hot numeric kernels: trigonometric synthesis at off-grid points.

Evaluating a Fourier interpolant at scattered points is O(modes *
points) with a complex exponential per pair; it dominates flow
inversion and pulled-back field evaluation.  Both a numba @njit kernel
and a chunked pure-numpy kernel are provided; the dispatch default is
numba unless the environment variable WKBLAB_NO_NUMBA is set to a
truthy value (or numba is unavailable).  benchmarks/bench_kernels.py
compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("WKBLAB_NO_NUMBA", "").lower() in ("1", "true", "yes")

try:  # pragma: no cover - exercised via either dispatch path
    if _DISABLED:
        raise ImportError("numba disabled by WKBLAB_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def eval_series_numpy(coeffs: np.ndarray, kvecs: np.ndarray, points: np.ndarray,
                      chunk: int = 2048) -> np.ndarray:
    """Sum_m coeffs[m] * exp(i kvecs[m].points[p]) for every point p."""
    out = np.empty(points.shape[0], dtype=np.complex128)
    for start in range(0, points.shape[0], chunk):
        stop = min(start + chunk, points.shape[0])
        phase = points[start:stop] @ kvecs.T
        out[start:stop] = np.exp(1j * phase) @ coeffs
    return out


@njit(cache=True)
def _eval_series_jit(coeffs, kvecs, points):  # pragma: no cover - jit body
    npts = points.shape[0]
    nmodes = kvecs.shape[0]
    d = kvecs.shape[1]
    out = np.empty(npts, dtype=np.complex128)
    for p in range(npts):
        acc = 0.0 + 0.0j
        for m in range(nmodes):
            phase = 0.0
            for i in range(d):
                phase += kvecs[m, i] * points[p, i]
            acc += coeffs[m] * (np.cos(phase) + 1j * np.sin(phase))
        out[p] = acc
    return out


def eval_series_numba(coeffs: np.ndarray, kvecs: np.ndarray, points: np.ndarray) -> np.ndarray:
    if not HAVE_NUMBA:
        raise RuntimeError("numba path requested but numba is not available")
    return _eval_series_jit(
        np.ascontiguousarray(coeffs, dtype=np.complex128),
        np.ascontiguousarray(kvecs, dtype=np.float64),
        np.ascontiguousarray(points, dtype=np.float64),
    )


def eval_series(coeffs: np.ndarray, kvecs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Dispatch to the active kernel (numba unless disabled)."""
    if HAVE_NUMBA:
        return eval_series_numba(coeffs, kvecs, points)
    return eval_series_numpy(coeffs, kvecs, points)
