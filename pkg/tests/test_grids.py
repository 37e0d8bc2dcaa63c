"""Grid construction, bumps, norms, support audits, and field dumps."""

import numpy as np
import pytest

from wkblab import (
    ComplexField,
    RealField,
    SupportBox,
    bump,
    dump_field,
    load_field,
    make_grid,
    mass_outside,
    norm,
)


def test_make_grid_basic():
    g = make_grid(1, 16, 1.0)
    assert g.dx == 0.125
    assert g.axis()[0] == -1.0
    g2 = make_grid(2, 64, 4.0)
    assert g2.size == 4096
    assert g2.dx == 0.125


def test_make_grid_rejects_bad_input():
    with pytest.raises(ValueError):
        make_grid(1, 17, 1.0)
    with pytest.raises(ValueError):
        make_grid(4, 16, 1.0)
    with pytest.raises(ValueError):
        make_grid(1, 8, 1.0)
    with pytest.raises(ValueError):
        make_grid(1, 16, -1.0)


def test_field_shape_and_finiteness_validation():
    g = make_grid(1, 16, 1.0)
    with pytest.raises(ValueError):
        RealField(g, np.zeros(7))
    bad = np.zeros(16)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        RealField(g, bad)
    bad_c = np.zeros(16, dtype=complex)
    bad_c[0] = np.inf * 1j
    with pytest.raises(ValueError):
        ComplexField(g, bad_c)


def test_norm_constant_and_zero():
    g = make_grid(1, 64, 1.0)
    one = RealField(g, np.ones(g.shape))
    assert norm(one, "l2") == pytest.approx(np.sqrt(2.0), rel=1e-14)
    zero = RealField.zeros(g)
    for kind in ("l2", "linf", "l2linf"):
        assert norm(zero, kind) == 0.0
    assert norm(zero, "hs", s=2.0) == 0.0


def test_hs_norm_single_mode_against_direct_sum():
    # e^{ikx} with k on the lattice: Hs norm (1+k^2)^{s/2} sqrt(2L),
    # cross-checked against the quadrature sum with explicit weights
    g = make_grid(1, 128, 2.0)
    k = 3 * np.pi / g.L
    f = ComplexField(g, np.exp(1j * k * g.axis()))
    for s in (0.0, 1.0, 2.5):
        expected = (1 + k**2) ** (s / 2) * np.sqrt(2 * g.L)
        assert norm(f, "hs", s=s) == pytest.approx(expected, rel=1e-12)
    # direct-sum oracle: weights over the explicit spectrum
    fh = np.fft.fft(f.samples)
    kk = 2 * np.pi * np.fft.fftfreq(g.n, d=g.dx)
    s = 1.5
    direct = np.sqrt(np.sum((1 + kk**2) ** s * np.abs(fh) ** 2) * g.dx / g.n)
    assert norm(f, "hs", s=s) == pytest.approx(direct, rel=1e-13)


def test_hs_zero_equals_l2():
    g = make_grid(1, 64, 1.5)
    rng = np.random.default_rng(7)
    f = ComplexField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    assert norm(f, "hs", s=0.0) == pytest.approx(norm(f, "l2"), rel=1e-12)


def test_bump_profile():
    g = make_grid(1, 256, 2.0)
    b = bump(g, 0.0, 1.0, 1.0)
    i0 = np.argmin(np.abs(g.axis()))
    assert b.samples[i0] == pytest.approx(np.exp(-1.0), abs=1e-15)
    assert np.all(b.samples >= 0)
    assert b.samples.max() == pytest.approx(np.exp(-1.0), abs=1e-15)
    outside = np.abs(g.axis()) >= 1.0
    assert np.all(b.samples[outside] == 0.0)


def test_bump_disjoint_product_is_zero():
    g = make_grid(1, 256, 4.0)
    b1 = bump(g, -2.0, 0.8, 1.0)
    b2 = bump(g, 1.5, 0.7, 2.0)
    assert np.all(b1.samples * b2.samples == 0.0)


def test_bump_rejects_boundary_support():
    g = make_grid(1, 64, 1.0)
    with pytest.raises(ValueError):
        bump(g, 0.5, 0.6, 1.0)


def test_mass_outside_containment_cases():
    g = make_grid(1, 512, 4.0)
    b = bump(g, 0.0, 1.0, 1.0)
    inside_box = SupportBox((0.0,), (1.0,))
    assert mass_outside(b, inside_box) <= 1e-14
    far_box = SupportBox((3.0,), (0.5,))
    assert mass_outside(b, far_box) == pytest.approx(1.0, abs=1e-14)
    assert mass_outside(RealField.zeros(g), inside_box) == 0.0


def test_mass_outside_half_straddle():
    # symmetric bump centered between two grid points, box covering the
    # half-line through the center: exactly half the L2 mass is outside
    g = make_grid(1, 1024, 4.0)
    c = g.dx / 2
    b = bump(g, c, 1.0, 1.0)
    half = SupportBox((c - 2.0,), (2.0,))  # covers x <= c
    frac = mass_outside(b, half)
    # direct quadrature oracle over the complement
    x = g.axis()
    prof = b.samples
    direct = np.sum(prof[x > c] ** 2) / np.sum(prof**2)
    assert frac == pytest.approx(direct, abs=1e-14)
    assert frac == pytest.approx(0.5, abs=1e-10)


def test_support_box_helpers():
    box1 = SupportBox((0.0,), (1.0,))
    box2 = SupportBox((3.0,), (1.0,))
    assert box1.gap_to(box2) == pytest.approx(1.0)
    g = make_grid(1, 64, 4.0)
    assert box1.margin_inside(g) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        SupportBox((0.0,), (0.0,))


def test_field_dump_roundtrip(tmp_path):
    g = make_grid(2, 16, 1.0)
    rng = np.random.default_rng(3)
    f = ComplexField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    path = tmp_path / "field.wkbf"
    dump_field(f, path)
    back = load_field(path)
    assert back.grid == g
    np.testing.assert_array_equal(back.samples, f.samples)
    # real fields dump with zero imaginary part
    r = RealField(g, rng.standard_normal(g.shape))
    dump_field(r, path)
    back = load_field(path)
    np.testing.assert_array_equal(back.samples.imag, 0.0)
    np.testing.assert_array_equal(back.samples.real, r.samples)


def test_field_dump_header(tmp_path):
    g = make_grid(1, 16, 2.0)
    f = RealField.zeros(g)
    path = tmp_path / "f.wkbf"
    dump_field(f, path)
    raw = path.read_bytes()
    assert raw[:5] == b"WKBF1"
    assert raw[5] == 1
    assert int.from_bytes(raw[6:10], "little") == 16
    assert len(raw) == 5 + 1 + 4 + 8 + 16 * 16
