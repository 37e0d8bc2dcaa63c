"""Weakly nonlinear amplitude dynamics for linear-phase modes.

With the nonlinearity scaled by eps, phases stay the free ones
k.x - |k|^2 t/2 and only amplitudes interact, through index triples
whose wavevectors satisfy both the momentum and kinetic-energy
matching conditions.  Geometrically these are rectangles in wavevector
space (plus two degenerate patterns), which in one dimension forces
pure phase modulation, while for d >= 2 three modes can create a
fourth.  Closed forms for one and two modes serve as oracles for the
transported amplitude system.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .grids import ComplexField, GridSpec, RealField, norm
from .spectral import translate_arr


@dataclass
class WavevectorSet:
    k: np.ndarray                    # (N, d)
    created_from: dict = field(default_factory=dict)

    def __post_init__(self):
        self.k = np.atleast_2d(np.asarray(self.k, dtype=float))
        n = self.k.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                if np.allclose(self.k[i], self.k[j], atol=1e-12):
                    raise ValueError(f"duplicate wavevectors at {i} and {j}")

    @property
    def count(self) -> int:
        return self.k.shape[0]

    @property
    def d(self) -> int:
        return self.k.shape[1]


@dataclass(frozen=True)
class ResonanceQuadruple:
    j: int
    l: int
    m: int
    n: int
    kind: str  # "degenerate" or "rectangle"


def rectangle_check(kj, kl, km, kn, tol: float = 1e-10) -> bool:
    """Momentum and kinetic-energy matching of the index triple."""
    kj, kl, km, kn = (np.asarray(v, dtype=float) for v in (kj, kl, km, kn))
    mom = np.max(np.abs(kj - kl + km - kn))
    en = abs(kj @ kj - kl @ kl + km @ km - kn @ kn)
    return bool(mom <= tol and en <= tol)


def geometric_rectangle_check(kj, kl, km, kn, tol: float = 1e-10) -> bool:
    """Independent characterization: the two degenerate patterns, or the
    endpoints form a nondegenerate rectangle with kl and kn opposing."""
    kj, kl, km, kn = (np.asarray(v, dtype=float) for v in (kj, kl, km, kn))

    def same(a, b):
        return np.max(np.abs(a - b)) <= tol

    if same(kj, kn) and same(km, kl):
        return True
    if same(kj, kl) and same(km, kn):
        return True
    # parallelogram with perpendicular adjacent sides and nonzero sides
    if not same(kj + km, kl + kn):
        return False
    if same(kj, kl) or same(km, kl):
        return False
    return abs((kj - kl) @ (km - kl)) <= tol


def resonance_set(K: WavevectorSet, n: int, tol: float = 1e-10) -> list:
    """All triples (j, l, m) resonant with mode n, classified."""
    k = K.k
    N = k.shape[0]
    kj = k[:, None, None, :]
    kl = k[None, :, None, :]
    km = k[None, None, :, :]
    mom = np.max(np.abs(kj - kl + km - k[n]), axis=-1)
    sq = np.sum(k**2, axis=1)
    en = np.abs(sq[:, None, None] - sq[None, :, None] + sq[None, None, :] - sq[n])
    hits = np.argwhere((mom <= tol) & (en <= tol))
    out = []
    for j, l, m in hits:
        degenerate = (
            np.allclose(k[j], k[n], atol=tol) and np.allclose(k[m], k[l], atol=tol)
        ) or (
            np.allclose(k[j], k[l], atol=tol) and np.allclose(k[m], k[n], atol=tol)
        )
        out.append(ResonanceQuadruple(int(j), int(l), int(m), int(n),
                                      "degenerate" if degenerate else "rectangle"))
    return out


def complete_wavevectors(K: WavevectorSet, tol: float = 1e-10) -> WavevectorSet:
    """Append every wavevector creatable by one resonant interaction of
    the existing ones; a second pass must be closed, else this errors."""

    def one_pass(karr):
        created = []
        sq = np.sum(karr**2, axis=1)
        N = karr.shape[0]
        for j in range(N):
            for l in range(N):
                for m in range(N):
                    kn = karr[j] - karr[l] + karr[m]
                    if abs(sq[j] - sq[l] + sq[m] - kn @ kn) > tol:
                        continue
                    known = any(np.allclose(kn, kk, atol=tol) for kk in karr)
                    fresh = any(np.allclose(kn, kk, atol=tol) for kk, _ in created)
                    if not known and not fresh:
                        created.append((kn, (j, l, m)))
        return created

    created = one_pass(K.k)
    if not created:
        return K
    new_k = np.vstack([K.k] + [c[0] for c in created])
    if one_pass(new_k):
        raise RuntimeError(
            "resonance completion is not closed after one pass; "
            "this wavevector family is outside the supported configurations"
        )
    created_from = dict(K.created_from)
    for i, (_, triple) in enumerate(created):
        created_from[K.count + i] = triple
    return WavevectorSet(new_k, created_from)


def _line_integral(grid: GridSpec, density: np.ndarray, shifts: np.ndarray,
                   t: float, panels: int = 8, tol: float = 1e-10,
                   max_panels: int = 512) -> np.ndarray:
    """int_0^t density(x - s(tau)) dtau with s affine in tau, by
    composite Simpson on Fourier-shifted copies; panel count doubles
    until the result moves less than tol."""
    if t == 0.0:
        return np.zeros(grid.shape)
    dens_hat = np.fft.fftn(density)

    def shifted(tau):
        s = shifts(tau)
        mult = np.ones(grid.shape, dtype=complex)
        k1d = grid.k_axis()
        for axis in range(grid.d):
            phase = np.exp(-1j * k1d * s[axis])
            phase[grid.n // 2] = np.cos(k1d[grid.n // 2] * s[axis])
            shape = [1] * grid.d
            shape[axis] = grid.n
            mult = mult * phase.reshape(shape)
        return np.fft.ifftn(mult * dens_hat).real

    prev = None
    while panels <= max_panels:
        taus = np.linspace(0.0, t, panels + 1)
        vals = np.stack([shifted(tau) for tau in taus])
        integral = simpson(vals, x=taus, axis=0)
        if prev is not None and np.max(np.abs(integral - prev)) <= tol * max(
            1.0, float(np.max(np.abs(integral)))
        ):
            return integral
        prev = integral
        panels *= 2
    return prev


def two_mode_amplitudes(alpha1, alpha2, k1, k2, t: float) -> tuple:
    """Closed-form transported amplitudes for two linear-phase modes:
    each profile rides its own wavevector and only accumulates phase,
    from its own density and twice the other's density swept along the
    relative characteristic."""
    grid = alpha1.grid
    k1 = np.atleast_1d(np.asarray(k1, dtype=float))
    k2 = np.atleast_1d(np.asarray(k2, dtype=float))
    dens1 = np.abs(alpha1.samples) ** 2
    dens2 = np.abs(alpha2.samples) ** 2

    moved1 = translate_arr(grid, alpha1.samples.astype(complex), t * k1)
    moved2 = translate_arr(grid, alpha2.samples.astype(complex), t * k2)
    cross1 = _line_integral(grid, dens2, lambda tau: (t - tau) * k1 + tau * k2, t)
    cross2 = _line_integral(grid, dens1, lambda tau: (t - tau) * k2 + tau * k1, t)
    a1 = moved1 * np.exp(-1j * (2 * cross1 + t * np.abs(moved1) ** 2))
    a2 = moved2 * np.exp(-1j * (2 * cross2 + t * np.abs(moved2) ** 2))
    return ComplexField(grid, a1), ComplexField(grid, a2)


@dataclass
class ResonantAmplitudes:
    grid: GridSpec
    k: np.ndarray              # (M, d) including created modes
    times: np.ndarray
    amps: list                 # per time: list of M ComplexFields (lab frame)
    initial_count: int
    created_from: dict

    def norms(self) -> np.ndarray:
        """(ntimes, M) array of L2 norms."""
        return np.array([[norm(a, "l2") for a in row] for row in self.amps])

    def to_csv(self, path) -> None:
        M = self.k.shape[0]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"l2_mode{i}" for i in range(M)])
            for ti, row in zip(self.times, self.amps):
                writer.writerow([repr(float(ti))] + [repr(norm(a, "l2")) for a in row])


def evolve_resonant_system(modes: list, T: float, dt: float = 5e-3,
                           sample_times=None) -> ResonantAmplitudes:
    """Integrate the resonant amplitude system in co-moving frames.

    modes: list of (profile ComplexField/RealField or None, wavevector).
    The wavevector family is first completed under resonance; created
    modes start from zero.  Translations between frames are exact
    Fourier shifts evaluated at each RK4 stage time.
    """
    grid = None
    kvecs, profiles = [], []
    for prof, k in modes:
        kvecs.append(np.atleast_1d(np.asarray(k, dtype=float)))
        profiles.append(prof)
        if prof is not None:
            grid = prof.grid
    if grid is None:
        raise ValueError("at least one mode needs a profile")
    K = complete_wavevectors(WavevectorSet(np.vstack(kvecs)))
    M = K.count
    quads = {n: resonance_set(K, n) for n in range(M)}

    b = []
    for i in range(M):
        if i < len(profiles) and profiles[i] is not None:
            b.append(profiles[i].samples.astype(complex).copy())
        else:
            b.append(np.zeros(grid.shape, dtype=complex))

    def rhs(t, b):
        hats = [np.fft.fftn(bn) for bn in b]
        cache = {}

        def in_frame(src, n):
            # b_src evaluated at y + t (k_n - k_src)
            key = (src, n)
            if key not in cache:
                rel = K.k[n] - K.k[src]
                if t == 0.0 or not rel.any():
                    cache[key] = b[src]
                else:
                    cache[key] = translate_arr(grid, b[src], -t * rel)
            return cache[key]

        out = []
        for n in range(M):
            acc = np.zeros(grid.shape, dtype=complex)
            for q in quads[n]:
                acc += in_frame(q.j, n) * np.conj(in_frame(q.l, n)) * in_frame(q.m, n)
            out.append(-1j * acc)
        return out

    nsteps = max(1, int(np.ceil(T / dt - 1e-12)))
    dt = T / nsteps
    if sample_times is None:
        sample_times = np.linspace(0.0, T, min(nsteps + 1, 11))
    sample_idx = sorted({int(round(t / dt)) for t in sample_times})

    times, amps = [], []

    def snapshot(t):
        times.append(t)
        row = []
        for n in range(M):
            lab = translate_arr(grid, b[n], t * K.k[n]) if t and K.k[n].any() else b[n]
            row.append(ComplexField(grid, lab))
        amps.append(row)

    if 0 in sample_idx:
        snapshot(0.0)
    t = 0.0
    for step in range(1, nsteps + 1):
        k1 = rhs(t, b)
        k2 = rhs(t + dt / 2, [bn + dt / 2 * kn for bn, kn in zip(b, k1)])
        k3 = rhs(t + dt / 2, [bn + dt / 2 * kn for bn, kn in zip(b, k2)])
        k4 = rhs(t + dt, [bn + dt * kn for bn, kn in zip(b, k3)])
        b = [bn + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
             for bn, a1, a2, a3, a4 in zip(b, k1, k2, k3, k4)]
        t = step * dt
        if step in sample_idx:
            snapshot(t)

    return ResonantAmplitudes(
        grid=grid, k=K.k, times=np.asarray(times), amps=amps,
        initial_count=len(modes), created_from=K.created_from,
    )


def wnl_approximant(res: ResonantAmplitudes, time_index: int, eps: float,
                    n: int | None = None) -> ComplexField:
    """sum_n a_n(t) e^{i(k_n.x - |k_n|^2 t/2)/eps} on the (optionally
    refined) grid."""
    from .spectral import resample

    t = float(res.times[time_index])
    grid = res.grid if n is None else GridSpec(res.grid.d, n, res.grid.L)
    out = np.zeros(grid.shape, dtype=complex)
    coords = grid.coords()
    for i in range(res.k.shape[0]):
        amp = res.amps[time_index][i]
        if n is not None and n != res.grid.n:
            amp = resample(amp, n)
        phase = np.zeros(grid.shape)
        for ax in range(grid.d):
            phase = phase + res.k[i, ax] * coords[ax]
        phase = phase - 0.5 * float(res.k[i] @ res.k[i]) * t
        out += amp.samples * np.exp(1j * phase / eps)
    return ComplexField(grid, out)
