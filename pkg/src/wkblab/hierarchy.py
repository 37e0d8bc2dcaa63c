"""Geometric-optics hierarchies behind the oscillatory representation
u = a exp(i(phi_pot + phi)/eps).

Three coupled systems are integrated by the same method-of-lines stack
(spectral space derivatives, RK4 in time, exponential high-mode filter
each step):

  scaled system   d_t phi + w.grad phi + |grad phi|^2/2 + |a|^2 = 0
                  d_t a + (w + grad phi).grad a
                        + a (div w + Lap phi)/2 = i (eps/2) Lap a

  limit system    the same with eps = 0

  first corrector: the linearization of the limit system about
                  (phi, a), driven by the source i/2 Lap a, with zero
                  initial data.

Here w = grad of the potential-generated Hamilton-Jacobi phase, which
for the quadratic potential family is an exact time-dependent affine
field integrated as a small Riccati system inside the same RK4 state;
for V = 0 it vanishes.  Gradient steepening (the hyperbolic breakdown)
is watched through ||grad v||_inf and the filter-band energy, and stops
the run rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import ComplexField, GridSpec, RealField, ResolutionError
from .potentials import EikonalQuadratic, Potential
from .spectral import (
    eval_at_arr,
    filter_multiplier,
    resample,
    translate_arr,
)


@dataclass
class WkbState:
    phi: RealField
    amp: ComplexField
    phi1: RealField | None = None
    amp1: ComplexField | None = None
    eps_tag: object = "limit"


@dataclass
class SymmetrizedState:
    re_a: RealField
    im_a: RealField
    v: list


@dataclass
class WkbSeries:
    grid: GridSpec
    potential: Potential
    eps: float | None
    times: np.ndarray
    states: list
    eikonal: list               # EikonalQuadratic per stored time
    gradv_times: np.ndarray
    gradv_max: np.ndarray
    blowup_time: float | None
    dt: float
    T: float

    @property
    def has_correctors(self) -> bool:
        return self.states and self.states[0].phi1 is not None

    def state_at(self, t: float) -> WkbState:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.states[i]


def stable_dt(grid: GridSpec, eps: float, speed: float, safety: float = 0.4) -> float:
    """RK4 step bound: transport CFL plus the imaginary-axis limit of
    the eps/2 Laplacian term (|lambda| dt <= 2.8)."""
    kmax = np.pi / grid.dx
    rate = speed * kmax + 0.5 * eps * kmax**2 * np.sqrt(grid.d)
    return safety * 2.8 / max(rate, 1e-12)


def _spectral_parts(grid: GridSpec, f: np.ndarray, mults, k2) -> tuple:
    """(gradient components, laplacian) from a single forward FFT."""
    fh = np.fft.fftn(f)
    grads = [np.fft.ifftn(m * fh) for m in mults]
    lap = np.fft.ifftn(-k2 * fh)
    return grads, lap


def _integrate(grid: GridSpec, potential: Potential, phi0: np.ndarray,
               a0: np.ndarray, eps: float, T: float, dt: float | None,
               sample_times, with_corrector: bool, grad_cap: float,
               band_cap: float = 1e-3, speed_hint: float | None = None,
               eik0: EikonalQuadratic | None = None):
    """Shared RK4 method-of-lines driver; returns a WkbSeries.

    eik0 seeds the quadratic Hamilton-Jacobi background; besides the
    potential-generated phase (zero seed) this carries co-moving frames:
    seeding g = k makes the background phase k.x - |k|^2 t/2 exactly, so
    linear-phase modes integrate with a periodic remainder and no cutoff.
    """
    from .spectral import _deriv_multipliers, _k_squared  # module-level caches

    mults = _deriv_multipliers(grid)
    k2 = _k_squared(grid)
    filt = filter_multiplier(grid)

    if speed_hint is None:
        g0, _ = _spectral_parts(grid, phi0, mults, k2)
        speed_hint = max(
            2.0 * max(np.max(np.abs(g.real)) for g in g0),
            np.max(np.abs(a0)),
            0.5,
        )
    if dt is None:
        dt = stable_dt(grid, eps, speed_hint)
    nsteps = max(1, int(np.ceil(T / dt - 1e-12)))
    dt = T / nsteps
    if sample_times is None:
        sample_times = np.linspace(0.0, T, min(nsteps + 1, 21))
    sample_idx = sorted({int(round(t / dt)) for t in sample_times})

    phi = np.asarray(phi0, dtype=float).copy()
    a = np.asarray(a0, dtype=complex).copy()
    phi1 = np.zeros_like(phi)
    a1 = np.zeros_like(a)
    eik = eik0 if eik0 is not None else EikonalQuadratic.initial(potential)
    has_background = (not potential.is_zero) or eik.G.any() or eik.g.any()
    coords = grid.coords() if has_background else None

    def w_fields(G, gvec):
        if not has_background:
            return None, 0.0
        w = []
        for i in range(grid.d):
            wi = np.full(grid.shape, gvec[i])
            for j in range(grid.d):
                if G[i, j]:
                    wi = wi + G[i, j] * coords[j]
            w.append(wi)
        return w, float(np.trace(G))

    def rhs(phi, a, phi1, a1, G, gvec, g0s):
        gph, lph = _spectral_parts(grid, phi, mults, k2)
        v = [g.real for g in gph]
        lap_phi = lph.real
        ga, la = _spectral_parts(grid, a, mults, k2)
        w, divw = w_fields(G, gvec)

        dphi = -(0.5 * sum(vi * vi for vi in v) + np.abs(a) ** 2)
        da = -(sum(vi * gi for vi, gi in zip(v, ga)) + 0.5 * a * lap_phi)
        if w is not None:
            dphi = dphi - sum(wi * vi for wi, vi in zip(w, v))
            da = da - sum(wi * gi for wi, gi in zip(w, ga)) - 0.5 * a * divw
        if eps:
            da = da + 0.5j * eps * la

        if with_corrector:
            gph1, lph1 = _spectral_parts(grid, phi1, mults, k2)
            v1 = [g.real for g in gph1]
            lap_phi1 = lph1.real
            ga1, _ = _spectral_parts(grid, a1, mults, k2)
            dphi1 = -(sum(vi * v1i for vi, v1i in zip(v, v1))
                      + 2.0 * (np.conj(a) * a1).real)
            da1 = -(sum(vi * g1i for vi, g1i in zip(v, ga1))
                    + sum(v1i * gi for v1i, gi in zip(v1, ga))
                    + 0.5 * a1 * lap_phi + 0.5 * a * lap_phi1) + 0.5j * la
            if w is not None:
                dphi1 = dphi1 - sum(wi * v1i for wi, v1i in zip(w, v1))
                da1 = da1 - sum(wi * g1i for wi, g1i in zip(w, ga1)) - 0.5 * a1 * divw
        else:
            dphi1 = 0.0
            da1 = 0.0

        dG = -G @ G - potential.Q
        dg = -G @ gvec - potential.b
        dg0 = -0.5 * float(gvec @ gvec) - potential.c
        return dphi, da, dphi1, da1, dG, dg, dg0

    def grad_v_max(phi):
        fh = np.fft.fftn(phi)
        worst = 0.0
        for i in range(grid.d):
            for j in range(i, grid.d):
                hij = np.fft.ifftn(mults[i] * mults[j] * fh).real
                worst = max(worst, float(np.max(np.abs(hij))))
        return worst

    states, stored_times, eiks = [], [], []
    gradv_times, gradv_vals = [], []
    blowup_time = None

    def snapshot(t):
        stored_times.append(t)
        eiks.append(EikonalQuadratic(potential, eik.G.copy(), eik.g.copy(), eik.g0))
        states.append(
            WkbState(
                phi=RealField(grid, phi.copy()),
                amp=ComplexField(grid, a.copy()),
                phi1=RealField(grid, phi1.copy()) if with_corrector else None,
                amp1=ComplexField(grid, a1.copy()) if with_corrector else None,
                eps_tag=eps if eps else "limit",
            )
        )

    t = 0.0
    gv = grad_v_max(phi)
    gradv_times.append(0.0)
    gradv_vals.append(gv)
    if 0 in sample_idx:
        snapshot(0.0)

    for step in range(1, nsteps + 1):
        y = (phi, a, phi1, a1, eik.G, eik.g, eik.g0)
        k1 = rhs(*y)
        k2_ = rhs(*_axpy(y, k1, 0.5 * dt))
        k3 = rhs(*_axpy(y, k2_, 0.5 * dt))
        k4 = rhs(*_axpy(y, k3, dt))
        phi = phi + dt / 6.0 * (k1[0] + 2 * k2_[0] + 2 * k3[0] + k4[0])
        a = a + dt / 6.0 * (k1[1] + 2 * k2_[1] + 2 * k3[1] + k4[1])
        if with_corrector:
            phi1 = phi1 + dt / 6.0 * (k1[2] + 2 * k2_[2] + 2 * k3[2] + k4[2])
            a1 = a1 + dt / 6.0 * (k1[3] + 2 * k2_[3] + 2 * k3[3] + k4[3])
        G = eik.G + dt / 6.0 * (k1[4] + 2 * k2_[4] + 2 * k3[4] + k4[4])
        gvec = eik.g + dt / 6.0 * (k1[5] + 2 * k2_[5] + 2 * k3[5] + k4[5])
        g0s = eik.g0 + dt / 6.0 * (k1[6] + 2 * k2_[6] + 2 * k3[6] + k4[6])
        eik = EikonalQuadratic(potential, G, gvec, g0s)

        phi = np.fft.ifftn(filt * np.fft.fftn(phi)).real
        a = np.fft.ifftn(filt * np.fft.fftn(a))
        if with_corrector:
            phi1 = np.fft.ifftn(filt * np.fft.fftn(phi1)).real
            a1 = np.fft.ifftn(filt * np.fft.fftn(a1))

        t = step * dt
        gv = grad_v_max(phi)
        gradv_times.append(t)
        gradv_vals.append(gv)
        band = _band_fraction(np.fft.fftn(a), filt)
        if not np.isfinite(gv) or gv > grad_cap or band > band_cap:
            blowup_time = t
            break
        if step in sample_idx:
            snapshot(t)

    return WkbSeries(
        grid=grid, potential=potential, eps=eps if eps else None,
        times=np.asarray(stored_times), states=states, eikonal=eiks,
        gradv_times=np.asarray(gradv_times), gradv_max=np.asarray(gradv_vals),
        blowup_time=blowup_time, dt=dt, T=T,
    )


def _band_fraction(spec: np.ndarray, filt: np.ndarray) -> float:
    spec2 = np.abs(spec) ** 2
    total = np.sum(spec2)
    if total == 0.0:
        return 0.0
    return float(np.sum(spec2[filt < 0.9]) / total)


def _axpy(y, k, h):
    phi, a, phi1, a1, G, g, g0 = y
    return (
        phi + h * k[0], a + h * k[1],
        phi1 + h * k[2] if isinstance(k[2], np.ndarray) else phi1,
        a1 + h * k[3] if isinstance(k[3], np.ndarray) else a1,
        G + h * k[4], g + h * k[5], g0 + h * k[6],
    )


def solve_grenier(phi0: RealField, a0: ComplexField, eps: float,
                  potential: Potential, T: float, dt: float | None = None,
                  sample_times=None, grad_cap: float = 50.0,
                  eik0: EikonalQuadratic | None = None) -> WkbSeries:
    """Scaled-system solve (keeps the i*eps/2 Laplacian term)."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return _integrate(phi0.grid, potential, phi0.samples, a0.samples, eps, T,
                      dt, sample_times, with_corrector=False, grad_cap=grad_cap,
                      eik0=eik0)


def solve_limit_system(phi0: RealField, a0: ComplexField, potential: Potential,
                       T: float, dt: float | None = None, sample_times=None,
                       grad_cap: float = 50.0,
                       eik0: EikonalQuadratic | None = None) -> WkbSeries:
    """Limit solve (eps = 0); blow-up detection doubles as a horizon
    estimate for the underlying hyperbolic dynamics."""
    return _integrate(phi0.grid, potential, phi0.samples, a0.samples, 0.0, T,
                      dt, sample_times, with_corrector=False, grad_cap=grad_cap,
                      eik0=eik0)


def solve_corrector1(limit: WkbSeries, potential: Potential,
                     dt: float | None = None, grad_cap: float = 50.0) -> WkbSeries:
    """First corrector, co-integrated with the limit system for
    stage-consistent coefficients; zero initial corrector data."""
    if limit.eps is not None:
        raise ValueError("corrector rides on a limit-system series")
    first = limit.states[0]
    return _integrate(
        limit.grid, potential, first.phi.samples, first.amp.samples, 0.0,
        limit.T, dt if dt is not None else limit.dt,
        limit.times, with_corrector=True, grad_cap=grad_cap,
        eik0=limit.eikonal[0],
    )


def symmetrized(state: WkbState) -> SymmetrizedState:
    from .spectral import spectral_gradient

    v = spectral_gradient(state.phi)
    return SymmetrizedState(
        re_a=RealField(state.phi.grid, state.amp.samples.real),
        im_a=RealField(state.phi.grid, state.amp.samples.imag),
        v=v,
    )


def curl_residual(state: WkbState) -> float:
    """Fourier curl test of v = grad phi; zero for d = 1."""
    grid = state.phi.grid
    if grid.d == 1:
        return 0.0
    sym = symmetrized(state)
    vh = [np.fft.fftn(c.samples) for c in sym.v]
    ks = grid.kgrid()
    scale = max(float(np.max(np.abs(k * h))) for k in ks for h in vh) or 1.0
    worst = 0.0
    for i in range(grid.d):
        for j in range(i + 1, grid.d):
            worst = max(worst, float(np.max(np.abs(ks[i] * vh[j] - ks[j] * vh[i]))))
    return worst / scale


def assemble_wkb(state: WkbState, eps: float, phi_eik: RealField | None = None,
                 order: int = 1, n: int | None = None) -> ComplexField:
    """Reconstruct a e^{i(phi_eik + phi + eps*phi1)/eps} (order 1) or the
    order-0 variant; optionally resampled onto a finer n before assembly.

    Rejects grids that cannot carry 8 points per oscillation of the
    total phase at scale eps.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if order == 1 and (state.phi1 is None or state.amp1 is None):
        raise ValueError("order-1 assembly needs correctors")
    phi = state.phi
    amp = state.amp
    phi1 = state.phi1
    if n is not None and n != phi.grid.n:
        phi = resample(phi, n)
        amp = resample(amp, n)
        phi1 = resample(phi1, n) if phi1 is not None else None
    grid = phi.grid
    total = phi.samples.copy()
    if order == 1:
        total = total + eps * phi1.samples
    if phi_eik is not None:
        if phi_eik.grid != grid:
            raise ValueError("phi_eik must be sampled on the assembly grid")
        total = total + phi_eik.samples
    gmax = max(
        float(np.max(np.abs(np.gradient(total, grid.dx, axis=i))))
        for i in range(grid.d)
    )
    if gmax > 0 and grid.dx > eps * 2 * np.pi / (8 * gmax):
        raise ResolutionError(
            f"grid spacing {grid.dx:.3g} cannot resolve phase scale "
            f"{eps * 2 * np.pi / (8 * gmax):.3g} (needs n >= "
            f"{int(np.ceil(2 * grid.L * 8 * gmax / (eps * 2 * np.pi)))})"
        )
    return ComplexField(grid, amp.samples * np.exp(1j * total / eps))


def pull_back(state: WkbState, bundle, time_index: int) -> WkbState:
    """Compose fields with the classical flow: psi = phi(x(t,y)),
    A = sqrt(J) a(x(t,y)); same for the correctors when present."""
    grid = state.phi.grid
    if bundle.times[time_index] > bundle.horizon:
        raise ValueError("pull-back requested past the flow horizon")
    aff = bundle.affine[time_index]
    sqrtJ = np.sqrt(bundle.J[time_index]).reshape(grid.shape)

    pure_shift = np.allclose(aff.A, np.eye(grid.d), atol=1e-13) and (
        np.max(np.abs(aff.B)) < 1e-13
    )

    def compose(arr):
        if pure_shift:
            return translate_arr(grid, arr, -aff.p)
        return eval_at_arr(grid, arr, bundle.x[time_index]).reshape(grid.shape)

    psi = RealField(grid, compose(state.phi.samples).real)
    A = ComplexField(grid, sqrtJ * compose(state.amp.samples))
    psi1 = A1 = None
    if state.phi1 is not None:
        psi1 = RealField(grid, compose(state.phi1.samples).real)
        A1 = ComplexField(grid, sqrtJ * compose(state.amp1.samples))
    return WkbState(phi=psi, amp=A, phi1=psi1, amp1=A1, eps_tag=state.eps_tag)
