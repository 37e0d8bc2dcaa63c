"""Spectral derivatives, translations, resampling, off-grid synthesis."""

import numpy as np
import pytest

from wkblab import ComplexField, RealField, bump, make_grid, norm
from wkblab import _kernels
from wkblab.spectral import (
    eval_at,
    eval_on_axes,
    high_band_fraction,
    parseval_l2,
    resample,
    spectral_gradient,
    spectral_laplacian,
    translate,
)


def band_limited(grid, seed=0, width=None):
    """Random field with spectrum confined to the lower half-band."""
    rng = np.random.default_rng(seed)
    spec = np.zeros(grid.shape, dtype=complex)
    cutoff = width if width is not None else grid.n // 4
    idx = np.fft.fftfreq(grid.n) * grid.n
    mask = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.d):
        shape = [1] * grid.d
        shape[axis] = grid.n
        mask &= np.abs(idx.reshape(shape)) <= cutoff
    draws = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    spec[mask] = draws * grid.size  # same function regardless of n
    return ComplexField(grid, np.fft.ifftn(spec))


def test_gradient_of_constant_is_zero():
    g = make_grid(2, 32, 1.0)
    f = ComplexField(g, np.full(g.shape, 2.3 + 0.4j))
    for comp in spectral_gradient(f):
        assert np.max(np.abs(comp.samples)) < 1e-14


def test_gradient_resolved_mode_exact():
    g = make_grid(1, 64, 2.0)
    x = g.axis()
    f = RealField(g, np.sin(np.pi * x / g.L))
    gx = spectral_gradient(f)[0]
    np.testing.assert_allclose(
        gx.samples, (np.pi / g.L) * np.cos(np.pi * x / g.L), atol=1e-13
    )


def test_gradient_matches_finite_differences():
    # centered-difference oracle: disagreement O(dx^2) as dx -> 0
    errs = []
    for n in (128, 256, 512):
        g = make_grid(1, n, 1.0)
        f = band_limited(g, seed=5, width=6)
        spectral = spectral_gradient(f)[0].samples
        fd = (np.roll(f.samples, -1) - np.roll(f.samples, 1)) / (2 * g.dx)
        errs.append(np.max(np.abs(spectral - fd)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_gradient_real_input_stays_real():
    g = make_grid(2, 32, 1.0)
    rng = np.random.default_rng(1)
    f = RealField(g, rng.standard_normal(g.shape))
    comps = spectral_gradient(f)
    assert all(isinstance(c, RealField) for c in comps)


def test_laplacian_consistency():
    g = make_grid(1, 128, 2.0)
    x = g.axis()
    f = RealField(g, np.cos(2 * np.pi * x / g.L))
    lap = spectral_laplacian(f)
    np.testing.assert_allclose(
        lap.samples, -((2 * np.pi / g.L) ** 2) * np.cos(2 * np.pi * x / g.L), atol=1e-11
    )


def test_parseval_identity():
    g = make_grid(2, 32, 1.7)
    rng = np.random.default_rng(2)
    f = ComplexField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    assert parseval_l2(f) == pytest.approx(norm(f, "l2"), rel=1e-12)


def test_translate_resolved_mode_exact():
    g = make_grid(1, 128, 2.0)
    k = 5 * np.pi / g.L
    f = ComplexField(g, np.exp(1j * k * g.axis()))
    s = 0.637
    shifted = translate(f, s)
    np.testing.assert_allclose(shifted.samples, np.exp(1j * k * (g.axis() - s)), atol=1e-12)


def test_translate_matches_shifted_bump():
    # agreement limited by the bump's own spectral tail at this resolution
    g = make_grid(1, 512, 4.0)
    b = bump(g, 0.0, 1.0, 1.0)
    shifted = translate(b, 0.731)
    direct = bump(g, 0.731, 1.0, 1.0)
    assert np.max(np.abs(shifted.samples - direct.samples)) < 1e-6


def test_translate_inverse_roundtrip():
    g = make_grid(2, 32, 2.0)
    f = band_limited(g, seed=9, width=8)
    back = translate(translate(f, [0.3, -0.7]), [-0.3, 0.7])
    assert np.max(np.abs(back.samples - f.samples)) < 1e-12


def test_resample_band_limited_exact():
    g = make_grid(1, 64, 1.0)
    fn = lambda x: np.sin(3 * np.pi * x) + 0.5 * np.cos(7 * np.pi * x)
    f = RealField.from_function(g, fn)
    up = resample(f, 256)
    expected = RealField.from_function(make_grid(1, 256, 1.0), fn)
    np.testing.assert_allclose(up.samples, expected.samples, atol=1e-13)
    down = resample(expected, 64)
    np.testing.assert_allclose(down.samples, f.samples, atol=1e-13)


def test_eval_at_reproduces_grid_samples():
    g = make_grid(2, 32, 1.5)
    f = band_limited(g, seed=11, width=8)
    vals = eval_at(f, g.points())
    np.testing.assert_allclose(vals, f.samples.ravel(), atol=1e-12)


def test_eval_at_off_grid_matches_analytic():
    g = make_grid(1, 64, 2.0)
    k = 3 * np.pi / g.L
    f = ComplexField(g, np.exp(1j * k * g.axis()))
    pts = np.array([[0.123], [-1.71], [0.997]])
    np.testing.assert_allclose(eval_at(f, pts), np.exp(1j * k * pts[:, 0]), atol=1e-12)


def test_eval_on_axes_matches_scattered():
    g = make_grid(2, 32, 1.0)
    f = band_limited(g, seed=4, width=8)
    ax0 = np.array([-0.3, 0.11, 0.52])
    ax1 = np.array([0.8, -0.44])
    tens = eval_on_axes(f, [ax0, ax1])
    pts = np.array([[a, b] for a in ax0 for b in ax1])
    scattered = eval_at(f, pts).reshape(3, 2)
    np.testing.assert_allclose(tens, scattered, atol=1e-11)


def test_numba_and_numpy_kernels_agree():
    rng = np.random.default_rng(12)
    coeffs = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    kvecs = rng.standard_normal((40, 2))
    pts = rng.standard_normal((17, 2))
    ref = _kernels.eval_series_numpy(coeffs, kvecs, pts)
    if _kernels.HAVE_NUMBA:
        jit = _kernels.eval_series_numba(coeffs, kvecs, pts)
        np.testing.assert_allclose(jit, ref, atol=1e-12)
    np.testing.assert_allclose(_kernels.eval_series(coeffs, kvecs, pts), ref, atol=1e-12)


def test_high_band_fraction():
    g = make_grid(1, 64, 1.0)
    smooth = RealField(g, np.cos(np.pi * g.axis() / g.L))
    assert high_band_fraction(g, smooth.samples) < 1e-20
    spiky = np.zeros(g.shape)
    spiky[g.n // 2] = 1.0  # delta: flat spectrum
    frac = high_band_fraction(g, spiky)
    assert frac > 0.05
