"""Multi-bump oscillatory initial data and the superposition experiment.

Builds sums of disjointly supported bump amplitudes with per-mode
phases, estimates the usable horizon from the limit-system breakdown
detector, evolves combined and per-mode data with the split-step
solver, and fits the log-log decay of the combined-vs-sum error over
an eps sweep.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .grids import (
    ComplexField,
    GridSpec,
    RealField,
    ResolutionError,
    SupportBox,
    bump,
    make_grid,
    norm,
)
from .hierarchy import solve_limit_system
from .nls import NlsParams, SolverInstabilityError, evolve
from .phases import zero_phase
from .potentials import Potential
from .flow import integrate_flow


class ConfigError(ValueError):
    """A multiphase configuration violates a structural invariant."""


@dataclass(frozen=True)
class ModeSpec:
    center: tuple
    radius: tuple
    height: float
    phase: object                # LinearPhase / QuadraticPhase / GridPhase
    cutoff_margin: float = 0.1
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        r = np.atleast_1d(np.asarray(self.radius, dtype=float))
        if r.size == 1:
            r = np.repeat(r, len(self.center))
        object.__setattr__(self, "radius", tuple(r))
        if self.cutoff_margin <= 0:
            raise ConfigError("cutoff_margin must be positive")

    @property
    def d(self) -> int:
        return len(self.center)

    def support_box(self) -> SupportBox:
        return SupportBox(self.center, self.radius)

    def amplitude(self, grid: GridSpec) -> RealField:
        return bump(grid, self.center, self.radius, self.height)


@dataclass
class MultiphaseConfig:
    modes: list
    eps_list: list
    kappa: int
    potential: Potential
    L: float
    n_base: int
    T_request: float
    dt_factor: float = 0.1
    sweep_margin: float = 1.0
    max_points: int = 1 << 22
    safety: float = 0.8

    def __post_init__(self):
        self.eps_list = [float(e) for e in self.eps_list]
        if any(e2 >= e1 for e1, e2 in zip(self.eps_list, self.eps_list[1:])):
            raise ConfigError("eps_list must be sorted strictly decreasing")
        if not self.modes:
            raise ConfigError("need at least one mode")

    @property
    def d(self) -> int:
        return self.modes[0].d

    def base_grid(self) -> GridSpec:
        return make_grid(self.d, self.n_base, self.L)

    def phase_bound(self) -> float:
        return max(m.phase.max_grad() for m in self.modes) + self.sweep_margin

    def validate(self) -> None:
        for i, m1 in enumerate(self.modes):
            for j in range(i + 1, len(self.modes)):
                m2 = self.modes[j]
                gap = m1.support_box().gap_to(m2.support_box())
                need = 2 * max(m1.cutoff_margin, m2.cutoff_margin)
                if gap < need:
                    name1 = m1.label or f"mode {i + 1}"
                    name2 = m2.label or f"mode {j + 1}"
                    raise ConfigError(
                        f"supports of {name1} and {name2} are too close "
                        f"(gap {gap:.4g} < {need:.4g})"
                    )
        grid = self.base_grid()
        speed = self.phase_bound()
        for i, m in enumerate(self.modes):
            margin = m.support_box().margin_inside(grid)
            travel = speed * self.T_request + 10 * grid.dx
            if margin < travel:
                raise ConfigError(
                    f"mode {m.label or i + 1} sits {margin:.4g} from the boundary; "
                    f"needs {travel:.4g} for transport at speed {speed:.3g}"
                )
        self.grid_for(min(self.eps_list))

    def grid_for(self, eps: float) -> GridSpec:
        """Resolution rule: at least 8 grid points per oscillation of
        the total phase at scale eps."""
        dx_req = eps * 2 * np.pi / (8 * self.phase_bound())
        n = self.n_base
        while 2 * self.L / n > dx_req:
            n *= 2
        if n**self.d > self.max_points:
            raise ResolutionError(
                f"eps={eps:g} needs n={n} per axis "
                f"({n**self.d} points > budget {self.max_points}); "
                f"minimal admissible n is {n}"
            )
        return make_grid(self.d, n, self.L)


def _ramp(t: np.ndarray) -> np.ndarray:
    """C-infinity monotone step: exactly 0 for t<=0, 1 for t>=1."""
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    s = t[mid]
    f = np.exp(-1.0 / s)
    g = np.exp(-1.0 / (1.0 - s))
    out[mid] = f / (f + g)
    return out


def make_cutoff(mode: ModeSpec, grid: GridSpec, others: list | None = None) -> RealField:
    """Smooth plateau: 1 on the mode's support box, 0 outside the box
    dilated by cutoff_margin, monotone mollified ramp between."""
    m = mode.cutoff_margin
    if m < 4 * grid.dx:
        raise ConfigError(
            f"cutoff_margin {m:g} must be at least 4*dx = {4 * grid.dx:g}"
        )
    out = np.ones(grid.shape)
    for i, x in enumerate(grid.coords()):
        t = (mode.radius[i] + m - np.abs(x - mode.center[i])) / m
        out = out * _ramp(t)
    if others:
        dilated = mode.support_box().dilate(m)
        for other in others:
            if dilated.gap_to(other.support_box().dilate(other.cutoff_margin)) < 0:
                raise ConfigError("cutoff supports overlap")
    return RealField(grid, out)


@dataclass
class InitialData:
    u0: ComplexField
    a0: RealField
    phi0: RealField
    per_mode: list  # (alpha_j, chi_phi_j, u0_j)


def build_initial_data(config: MultiphaseConfig, eps: float,
                       grid: GridSpec | None = None) -> InitialData:
    """u0 = sum_j alpha_j e^{i phi_j / eps}; the slow representation
    carries a0 = sum alpha_j and phi0 = sum chi_j phi_j, which agree
    with u0 pointwise because each alpha_j vanishes where chi_j != 1."""
    if grid is None:
        grid = config.grid_for(eps)
    dx_req = eps * 2 * np.pi / (8 * config.phase_bound())
    if grid.dx > dx_req:
        raise ResolutionError(
            f"grid dx={grid.dx:g} under-resolves phase scale {dx_req:g} at eps={eps:g}"
        )
    a0 = np.zeros(grid.shape)
    phi0 = np.zeros(grid.shape)
    u0 = np.zeros(grid.shape, dtype=complex)
    per_mode = []
    others = list(config.modes)
    for mode in config.modes:
        alpha = mode.amplitude(grid)
        chi = make_cutoff(mode, grid, [m for m in others if m is not mode])
        phi_j = mode.phase.phi_grid(grid)
        chi_phi = RealField(grid, chi.samples * phi_j)
        u0_j = ComplexField(grid, alpha.samples * np.exp(1j * phi_j / eps))
        a0 += alpha.samples
        phi0 += chi_phi.samples
        u0 += u0_j.samples
        per_mode.append((alpha, chi_phi, u0_j))
    return InitialData(
        u0=ComplexField(grid, u0),
        a0=RealField(grid, a0),
        phi0=RealField(grid, phi0),
        per_mode=per_mode,
    )


def _mode_limit_series(mode: ModeSpec, config: MultiphaseConfig,
                       grid: GridSpec, grad_cap: float, T: float):
    """Limit-system run for one mode in its own phase frame.

    A linear phase k.x is carried exactly by the quadratic background
    (seed g = k gives phase k.x - |k|^2 t/2), so the integrated
    remainder is periodic and no support cutoff enters; smooth grid
    phases are periodic already.  This keeps the breakdown detector
    blind to cutoff-ramp artifacts, which are pure gauge for the
    observable fields."""
    from .phases import GridPhase, LinearPhase, QuadraticPhase
    from .potentials import EikonalQuadratic

    alpha = mode.amplitude(grid).as_complex()
    pot = config.potential
    if isinstance(mode.phase, LinearPhase):
        eik0 = EikonalQuadratic(
            pot, np.zeros((grid.d, grid.d)), np.asarray(mode.phase.k, dtype=float), 0.0
        )
        phi0 = RealField.zeros(grid)
    elif isinstance(mode.phase, QuadraticPhase):
        eik0 = EikonalQuadratic(pot, mode.phase.A.copy(), mode.phase.b.copy(),
                                float(mode.phase.c))
        phi0 = RealField.zeros(grid)
    else:
        eik0 = None
        phi0 = RealField(grid, mode.phase.phi_grid(grid))
    return solve_limit_system(phi0, alpha, pot, T=T, grad_cap=grad_cap, eik0=eik0)


def estimate_T_star(config: MultiphaseConfig, grad_cap: float = 50.0) -> float:
    """Usable horizon: per-mode limit-system breakdown times (each mode
    integrated in its own phase frame), intersected with the classical
    flow horizon and T_request, times a safety factor.

    While the per-mode supports stay disjoint, the combined dynamics is
    the sum of the per-mode ones (zero speed of propagation), so the
    combined lifespan is the minimum of the per-mode ones."""
    grid = config.base_grid()
    horizon = config.T_request
    if not config.potential.is_zero:
        bundle = integrate_flow(config.potential, zero_phase(config.d),
                                T=config.T_request, grid=grid)
        horizon = min(horizon, bundle.horizon)

    t_star = horizon
    for mode in config.modes:
        series = _mode_limit_series(mode, config, grid, grad_cap, config.T_request)
        if series.blowup_time is not None:
            t_star = min(t_star, series.blowup_time)
    return config.safety * t_star


@dataclass
class ConvergenceReport:
    eps_list: list
    rows: list                 # one dict per eps actually run
    slope: float
    intercept: float
    fit_residual: float
    verdicts: dict
    skipped: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        cols = ["eps", "E_L2", "E_Linf", "E_combined", "T_star_used", "n_grid", "dt"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for row in self.rows:
                writer.writerow([repr(row[c]) for c in cols])

    def summary_text(self) -> str:
        lines = [
            f"slope = {self.slope!r}",
            f"intercept = {self.intercept!r}",
            f"fit_residual = {self.fit_residual!r}",
        ]
        for key, val in sorted(self.verdicts.items()):
            lines.append(f"{key} = {val}")
        if self.skipped:
            lines.append("skipped = " + ", ".join(f"{e:g}" for e in self.skipped))
        return "\n".join(lines) + "\n"


def fit_loglog(eps_vals, errors) -> tuple:
    """(slope, intercept, rms residual) of log E against log eps."""
    eps_vals = np.asarray(eps_vals, dtype=float)
    errors = np.clip(np.asarray(errors, dtype=float), 1e-16, None)
    lx, ly = np.log(eps_vals), np.log(errors)
    if len(eps_vals) < 2:
        return float("nan"), float("nan"), float("nan")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return float(slope), float(intercept), resid


def superposition_experiment(config: MultiphaseConfig, sample_count: int = 21,
                             t_star: float | None = None) -> ConvergenceReport:
    """Evolve combined and per-mode data for each eps on the same grid
    and time step; E(eps) = max over sampled t of the combined norm
    (max of L2 and sup) of u - sum_j u_j."""
    config.validate()
    if t_star is None:
        t_star = estimate_T_star(config)
    rows, skipped = [], []
    for eps in config.eps_list:
        try:
            grid = config.grid_for(eps)
            data = build_initial_data(config, eps, grid)
            params = NlsParams(
                eps=eps, kappa=config.kappa, potential=config.potential,
                T=t_star, dt=config.dt_factor * eps,
            )
            times = np.linspace(0.0, t_star, max(sample_count, 20))
            combined = evolve(data.u0, params, times)
            mode_runs = [evolve(u0_j, params, times) for (_, _, u0_j) in data.per_mode]
            e_l2 = e_linf = 0.0
            for i in range(len(times)):
                diff = combined.snapshots[i].samples.copy()
                for run in mode_runs:
                    diff -= run.snapshots[i].samples
                dfield = ComplexField(grid, diff)
                e_l2 = max(e_l2, norm(dfield, "l2"))
                e_linf = max(e_linf, norm(dfield, "linf"))
            rows.append({
                "eps": eps, "E_L2": e_l2, "E_Linf": e_linf,
                "E_combined": max(e_l2, e_linf), "T_star_used": t_star,
                "n_grid": grid.n, "dt": params.dt,
            })
        except (SolverInstabilityError, ResolutionError):
            skipped.append(eps)
    errors = [r["E_combined"] for r in rows]
    slope, intercept, resid = fit_loglog([r["eps"] for r in rows], errors)
    verdicts = {
        "superposition_holds": bool(
            rows and (slope >= 2.0 or max(errors) <= 1e-6)
        ),
        "no_decay": bool(rows and min(errors) / max(max(errors), 1e-300) >= 0.3),
        "max_error": max(errors) if rows else float("nan"),
        "min_error": min(errors) if rows else float("nan"),
    }
    return ConvergenceReport(
        eps_list=list(config.eps_list), rows=rows, slope=slope,
        intercept=intercept, fit_residual=resid, verdicts=verdicts,
        skipped=skipped,
    )
