"""Split-step solver: closed forms, conservation, covariances."""

import numpy as np
import pytest

from wkblab import ComplexField, bump, diff_norm, make_grid, norm
from wkblab.nls import (
    EvolveResult,
    NlsParams,
    SolverInstabilityError,
    energy,
    evolve,
    lattice_wavevector,
    plane_wave,
    strang_step,
)
from wkblab.potentials import harmonic_potential, linear_potential, zero_potential
from wkblab.spectral import translate


def wkb_bump_state(grid, eps, center=0.0, radius=0.5, height=1.0, k=1.0):
    amp = bump(grid, center, radius, height)
    kvec = lattice_wavevector(grid, np.full(grid.d, k), eps)
    phase = np.zeros(grid.shape)
    for i, x in enumerate(grid.coords()):
        phase += (kvec[i] / eps) * x
    return ComplexField(grid, amp.samples * np.exp(1j * phase))


def test_zero_initial_data_stays_zero():
    g = make_grid(1, 64, 1.0)
    p = NlsParams(eps=0.25, kappa=0, potential=zero_potential(1), T=0.1)
    out = strang_step(ComplexField.zeros(g), p, dt=0.01)
    assert np.all(out.samples == 0)


def test_plane_wave_closed_form():
    # constant-modulus solution: u = A exp(i(k.x - (|k|^2/2 + A^2) t)/eps)
    eps = 1.0 / 16.0
    g = make_grid(1, 256, 4.0)
    A = 0.8
    u0 = plane_wave(g, A, 1.0, eps)
    k = lattice_wavevector(g, 1.0, eps)[0]
    p = NlsParams(eps=eps, kappa=0, potential=zero_potential(1), T=0.1, dt=1e-3)
    res = evolve(u0, p, [0.1])
    t = 0.1
    omega = 0.5 * k**2 + A**2
    exact = A * np.exp(1j * ((k / eps) * g.axis() - omega * t / eps))
    err = np.max(np.abs(res.snapshots[-1].samples - exact))
    assert err <= 1e-6


def test_strang_step_time_reversal():
    eps = 1.0 / 8.0
    g = make_grid(1, 256, 2.0)
    u0 = wkb_bump_state(g, eps)
    p = NlsParams(eps=eps, kappa=0, potential=zero_potential(1), T=1.0)
    dt = 0.01
    fwd = strang_step(u0, p, dt)
    back = strang_step(fwd, p, -dt)
    assert np.max(np.abs(back.samples - u0.samples)) <= 1e-10


def test_evolve_returns_initial_state():
    g = make_grid(1, 64, 1.0)
    eps = 0.5
    u0 = wkb_bump_state(g, eps, radius=0.4)
    p = NlsParams(eps=eps, kappa=0, potential=zero_potential(1), T=0.1)
    res = evolve(u0, p, [0.0])
    np.testing.assert_array_equal(res.snapshots[0].samples, u0.samples)


def test_mass_conserved_along_evolution():
    eps = 1.0 / 8.0
    g = make_grid(1, 512, 4.0)
    u0 = wkb_bump_state(g, eps, center=-1.0, radius=0.8, height=1.2)
    p = NlsParams(eps=eps, kappa=0, potential=linear_potential([0.5]), T=0.4)
    res = evolve(u0, p, np.linspace(0.0, 0.4, 9))
    m0 = res.mass[0]
    assert np.all(np.abs(res.mass / m0 - 1.0) <= 1e-10)


def test_evolve_self_convergence_second_order():
    eps = 1.0 / 8.0
    g = make_grid(1, 512, 4.0)
    u0 = wkb_bump_state(g, eps, radius=0.7)
    T = 0.2

    def final(dt):
        p = NlsParams(eps=eps, kappa=0, potential=zero_potential(1), T=T, dt=dt)
        return evolve(u0, p, [T]).snapshots[-1]

    u1, u2, u4 = final(4e-3), final(2e-3), final(1e-3)
    e1 = diff_norm(u1, u2, "linf")
    e2 = diff_norm(u2, u4, "linf")
    assert 3.0 <= e1 / e2 <= 5.0


def test_energy_examples():
    g = make_grid(1, 64, 1.0)
    p = NlsParams(eps=0.5, kappa=0, potential=zero_potential(1), T=1.0)
    assert energy(ComplexField.zeros(g), p) == 0.0
    A = 1.3
    const = ComplexField(g, np.full(g.shape, A, dtype=complex))
    expected = 0.5 * A**4 * (2 * g.L)
    assert energy(const, p) == pytest.approx(expected, rel=1e-12)
    p1 = NlsParams(eps=0.5, kappa=1, potential=zero_potential(1), T=1.0)
    assert energy(const, p1) == pytest.approx(0.5 / 2 * A**4 * (2 * g.L), rel=1e-12)


def test_energy_drift_second_order_in_dt():
    eps = 1.0 / 8.0
    g = make_grid(1, 512, 4.0)
    u0 = wkb_bump_state(g, eps, radius=0.7, height=1.1)
    T = 0.5

    def drift(dt):
        p = NlsParams(eps=eps, kappa=0, potential=zero_potential(1), T=T, dt=dt)
        res = evolve(u0, p, np.linspace(0, T, 11))
        return np.max(np.abs(res.energy - res.energy[0]))

    d1, d2 = drift(4e-3), drift(2e-3)
    assert 3.0 <= d1 / d2 <= 5.0


def test_gauge_invariance():
    eps = 1.0 / 8.0
    g = make_grid(1, 256, 2.0)
    u0 = wkb_bump_state(g, eps)
    theta = 0.77
    p = NlsParams(eps=eps, kappa=0, potential=zero_potential(1), T=0.1, dt=2e-3)
    a = evolve(u0, p, [0.1]).snapshots[-1]
    rotated = ComplexField(g, np.exp(1j * theta) * u0.samples)
    b = evolve(rotated, p, [0.1]).snapshots[-1]
    assert np.max(np.abs(b.samples - np.exp(1j * theta) * a.samples)) <= 1e-12


def test_galilean_covariance():
    # boosting the data by q evolves into the boosted, translated field
    eps = 1.0 / 16.0
    g = make_grid(1, 1024, 4.0)
    u0 = wkb_bump_state(g, eps, radius=0.6, height=1.0, k=0.5)
    q = lattice_wavevector(g, 1.0, eps)[0]
    t = 0.2
    p = NlsParams(eps=eps, kappa=0, potential=zero_potential(1), T=t, dt=1e-3)
    plain = evolve(u0, p, [t]).snapshots[-1]
    boost0 = ComplexField(g, u0.samples * np.exp(1j * q * g.axis() / eps))
    boosted = evolve(boost0, p, [t]).snapshots[-1]
    # expected: u(t, x - qt) * exp(i(q.x - q^2 t/2)/eps)
    shifted = translate(plain, q * t)
    expected = shifted.samples * np.exp(1j * (q * g.axis() - 0.5 * q**2 * t) / eps)
    assert np.max(np.abs(boosted.samples - expected)) <= 1e-5


def test_avron_herbst_linear_potential():
    # a linear potential is equivalent to a time-dependent translation
    # and phase twist of the free-space solution
    eps = 1.0 / 16.0
    g = make_grid(1, 1024, 4.0)
    E = np.array([1.0])
    u0 = wkb_bump_state(g, eps, radius=0.6, height=1.0, k=0.5)
    t = 0.2
    p_lin = NlsParams(eps=eps, kappa=0, potential=linear_potential(E), T=t, dt=5e-4)
    p_free = NlsParams(eps=eps, kappa=0, potential=zero_potential(1), T=t, dt=5e-4)
    u_lin = evolve(u0, p_lin, [t]).snapshots[-1]
    u_free = evolve(u0, p_free, [t]).snapshots[-1]
    shifted = translate(u_lin, 0.5 * t**2 * E[0])  # u_lin(t, x - t^2 E/2)
    phase = (t * E[0] * g.axis() - t**3 * E[0] ** 2 / 3.0) / eps
    transformed = shifted.samples * np.exp(1j * phase)
    assert np.max(np.abs(transformed - u_free.samples)) <= 1e-4


def test_lens_transform_harmonic_2d():
    # harmonic-potential evolution maps onto free evolution through a
    # time-dependent rescaling; exact for the cubic nonlinearity at d=2
    eps = 1.0 / 8.0
    g = make_grid(2, 128, 3.0)
    omega = 1.0
    amp = bump(g, (0.0, 0.0), (0.8, 0.8), 1.0)
    u0 = ComplexField(g, amp.samples.astype(complex))
    t = 0.1
    s = np.arctan(omega * t) / omega
    scale = np.sqrt(1.0 + (omega * t) ** 2)
    p_har = NlsParams(
        eps=eps, kappa=0, potential=harmonic_potential(omega, 2), T=s, dt=2.5e-4
    )
    p_free = NlsParams(eps=eps, kappa=0, potential=zero_potential(2), T=t, dt=2.5e-4)
    u_har = evolve(u0, p_har, [s]).snapshots[-1]
    u_free = evolve(u0, p_free, [t]).snapshots[-1]

    from wkblab.spectral import eval_on_axes

    ax = g.axis() / scale
    inner = eval_on_axes(u_har, [ax, ax])
    xx, yy = np.meshgrid(g.axis(), g.axis(), indexing="ij")
    r2 = xx**2 + yy**2
    w = scale ** (-1.0) * inner * np.exp(1j * omega**2 * t * r2 / (2 * eps * (1 + (omega * t) ** 2)))
    assert np.max(np.abs(w - u_free.samples)) <= 1e-3


def test_instability_guard_trips():
    # chirped profile focusing within one kinetic step
    eps = 1.0 / 4.0
    g = make_grid(1, 1024, 4.0)
    amp = bump(g, 0.0, 2.0, 1.0)
    tfoc = 0.125
    chirp = np.exp(-1j * g.axis() ** 2 / (2 * eps * tfoc))
    u0 = ComplexField(g, amp.samples * chirp)
    p = NlsParams(eps=eps, kappa=1, potential=zero_potential(1), T=1.0,
                  instability_factor=3.0)
    with pytest.raises(SolverInstabilityError):
        strang_step(u0, p, dt=tfoc)


def test_params_validation():
    with pytest.raises(ValueError):
        NlsParams(eps=0.0, kappa=0, potential=zero_potential(1), T=1.0)
    with pytest.raises(ValueError):
        NlsParams(eps=0.5, kappa=2, potential=zero_potential(1), T=1.0)
    with pytest.raises(ValueError):
        NlsParams(eps=0.5, kappa=0, potential=zero_potential(1), T=-1.0)
    with pytest.raises(ValueError):
        NlsParams(eps=0.5, kappa=0, potential=zero_potential(1), T=1.0, dt=2.0)
