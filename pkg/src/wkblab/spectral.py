"""FFT-based spectral calculus on periodic grids.

Derivatives are exact for trigonometric polynomials below the Nyquist
mode; translations and resampling act on the trigonometric interpolant
and are exact in the same sense.  Array-level helpers (suffix _arr)
avoid field-wrapper overhead inside time integrators.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import _kernels
from .grids import ComplexField, GridSpec, RealField


def _spectrum(field) -> np.ndarray:
    return np.fft.fftn(field.samples)


@lru_cache(maxsize=32)
def _deriv_multipliers(grid: GridSpec) -> tuple:
    """1j*k per axis with the Nyquist mode zeroed (odd derivative)."""
    out = []
    for axis, k in enumerate(grid.kgrid()):
        mult = 1j * k.astype(np.complex128)
        idx = [slice(None)] * grid.d
        idx[axis] = grid.n // 2
        mult[tuple(idx)] = 0.0
        out.append(mult)
    return tuple(out)


@lru_cache(maxsize=32)
def _k_squared(grid: GridSpec) -> np.ndarray:
    k2 = np.zeros(grid.shape)
    for k in grid.kgrid():
        k2 = k2 + k**2
    return k2


def grad_arr(grid: GridSpec, f: np.ndarray) -> list:
    fh = np.fft.fftn(f)
    return [np.fft.ifftn(m * fh) for m in _deriv_multipliers(grid)]


def laplacian_arr(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(-_k_squared(grid) * np.fft.fftn(f))


def hessian_arr(grid: GridSpec, f: np.ndarray) -> list:
    """Full d x d list of second-derivative arrays (symmetric)."""
    fh = np.fft.fftn(f)
    mults = _deriv_multipliers(grid)
    out = [[None] * grid.d for _ in range(grid.d)]
    for i in range(grid.d):
        for j in range(i, grid.d):
            hij = np.fft.ifftn(mults[i] * mults[j] * fh)
            out[i][j] = hij
            out[j][i] = hij
    return out


def spectral_gradient(field) -> list:
    """Gradient of a field; real input yields real components."""
    comps = grad_arr(field.grid, field.samples)
    if isinstance(field, RealField):
        return [RealField(field.grid, c.real) for c in comps]
    return [ComplexField(field.grid, c) for c in comps]


def spectral_laplacian(field):
    lap = laplacian_arr(field.grid, field.samples)
    if isinstance(field, RealField):
        return RealField(field.grid, lap.real)
    return ComplexField(field.grid, lap)


@lru_cache(maxsize=128)
def _shift_multiplier(grid: GridSpec, shift: tuple) -> np.ndarray:
    mult = np.ones(grid.shape, dtype=np.complex128)
    k1d = grid.k_axis()
    for axis in range(grid.d):
        phase = np.exp(-1j * k1d * shift[axis])
        # cosine at the Nyquist mode keeps real fields real under shifts
        phase[grid.n // 2] = np.cos(k1d[grid.n // 2] * shift[axis])
        shape = [1] * grid.d
        shape[axis] = grid.n
        mult = mult * phase.reshape(shape)
    return mult


def translate_arr(grid: GridSpec, f: np.ndarray, shift) -> np.ndarray:
    """Samples of the interpolant shifted by `shift`: out(x) = f(x - shift)."""
    shift = tuple(float(s) for s in np.atleast_1d(shift))
    if len(shift) != grid.d:
        raise ValueError("shift dimension mismatch")
    return np.fft.ifftn(_shift_multiplier(grid, shift) * np.fft.fftn(f))


def translate(field, shift):
    out = translate_arr(field.grid, field.samples, shift)
    if isinstance(field, RealField):
        return RealField(field.grid, out.real)
    return ComplexField(field.grid, out)


def _resample_axis(spec: np.ndarray, axis: int, n_new: int) -> np.ndarray:
    n = spec.shape[axis]
    if n_new == n:
        return spec
    centered = np.moveaxis(np.fft.fftshift(spec, axes=axis), axis, 0)
    if n_new > n:
        lo = (n_new - n) // 2
        out = np.zeros((n_new,) + centered.shape[1:], dtype=spec.dtype)
        out[lo:lo + n] = centered
        # split the old Nyquist row between frequencies -n/2 and +n/2
        nyq = centered[0]
        out[lo] = 0.5 * nyq
        out[lo + n] = 0.5 * nyq
    else:
        lo = (n - n_new) // 2
        out = centered[lo:lo + n_new].copy()
        # the +n_new/2 frequency aliases onto the new Nyquist row
        out[0] = out[0] + centered[lo + n_new]
    return np.fft.ifftshift(np.moveaxis(out, 0, axis), axes=axis)


def resample_arr(grid: GridSpec, f: np.ndarray, n_new: int) -> np.ndarray:
    spec = np.fft.fftn(f)
    for axis in range(grid.d):
        spec = _resample_axis(spec, axis, n_new)
    scale = (n_new / grid.n) ** grid.d
    return np.fft.ifftn(spec) * scale


def resample(field, n_new: int):
    """Spectrally interpolate (or truncate) a field onto an n_new grid."""
    new_grid = GridSpec(field.grid.d, n_new, field.grid.L)
    out = resample_arr(field.grid, field.samples, n_new)
    if isinstance(field, RealField):
        return RealField(new_grid, out.real)
    return ComplexField(new_grid, out)


@lru_cache(maxsize=32)
def filter_multiplier(grid: GridSpec, alpha: float = 36.0, order: int = 36) -> np.ndarray:
    """Exponential high-mode filter exp(-alpha*(|k|/kmax)^order) per axis."""
    mult = np.ones(grid.shape)
    k1d = np.abs(grid.k_axis())
    kmax = np.max(k1d)
    for axis in range(grid.d):
        eta = k1d / kmax
        sigma = np.exp(-alpha * eta**order)
        shape = [1] * grid.d
        shape[axis] = grid.n
        mult = mult * sigma.reshape(shape)
    return mult


def apply_filter_arr(grid: GridSpec, f: np.ndarray, alpha: float = 36.0,
                     order: int = 36) -> np.ndarray:
    return np.fft.ifftn(filter_multiplier(grid, alpha, order) * np.fft.fftn(f))


def high_band_fraction(grid: GridSpec, f: np.ndarray) -> float:
    """Energy fraction carried by modes the filter attenuates below 0.9."""
    spec2 = np.abs(np.fft.fftn(f)) ** 2
    total = np.sum(spec2)
    if total == 0.0:
        return 0.0
    band = filter_multiplier(grid) < 0.9
    return float(np.sum(spec2[band]) / total)


# ---------------------------------------------------------------------------
# Off-grid evaluation of the trigonometric interpolant
# ---------------------------------------------------------------------------


def _flat_modes(grid: GridSpec, f: np.ndarray, tol: float):
    coeffs = (np.fft.fftn(f) / grid.size).ravel()
    mesh = np.meshgrid(*(grid.k_axis() for _ in range(grid.d)), indexing="ij")
    kvecs = np.stack([m.ravel() for m in mesh], axis=-1)
    if tol > 0:
        keep = np.abs(coeffs) > tol * np.max(np.abs(coeffs))
        coeffs = coeffs[keep]
        kvecs = kvecs[keep]
    return coeffs, kvecs


def eval_at_arr(grid: GridSpec, f: np.ndarray, points: np.ndarray,
                tol: float = 1e-14) -> np.ndarray:
    """Interpolant values at scattered points, shape (npoints,).

    Modes with relative coefficient magnitude below `tol` are dropped;
    the fields handled here have rapidly decaying spectra so this
    changes results at roundoff level only.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != grid.d:
        raise ValueError("points dimension mismatch")
    coeffs, kvecs = _flat_modes(grid, f, tol)
    # the DFT origin sits at the box corner x = -L
    return _kernels.eval_series(coeffs, kvecs, points + grid.L)


def eval_at(field, points, tol: float = 1e-14) -> np.ndarray:
    vals = eval_at_arr(field.grid, field.samples, points, tol)
    if isinstance(field, RealField):
        return vals.real
    return vals


def eval_on_axes_arr(grid: GridSpec, f: np.ndarray, axes: list) -> np.ndarray:
    """Interpolant on a tensor grid axes[0] x ... x axes[d-1] (separable)."""
    if len(axes) != grid.d:
        raise ValueError("need one target axis per dimension")
    out = np.fft.fftn(f) / grid.size
    k1d = grid.k_axis()
    for axis in range(grid.d):
        pts = np.asarray(axes[axis], dtype=float) + grid.L
        basis = np.exp(1j * np.outer(pts, k1d))
        out = np.moveaxis(np.tensordot(basis, out, axes=([1], [axis])), 0, axis)
    return out


def eval_on_axes(field, axes: list) -> np.ndarray:
    vals = eval_on_axes_arr(field.grid, field.samples, axes)
    if isinstance(field, RealField):
        return vals.real
    return vals


def parseval_l2(field) -> float:
    """L2 norm computed from Fourier coefficients (Parseval identity)."""
    grid = field.grid
    fh = np.fft.fftn(field.samples)
    return float(np.sqrt(np.sum(np.abs(fh) ** 2) * grid.cell_volume / grid.size))
