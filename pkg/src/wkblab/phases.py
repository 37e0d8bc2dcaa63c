"""Initial phase profiles: linear, quadratic, and grid-sampled smooth phases.

A phase provides pointwise values, gradients and Hessians both on a
grid and at scattered points; the flow integrator uses the scattered
forms to launch and invert characteristics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .grids import GridSpec, RealField


@dataclass(frozen=True)
class LinearPhase:
    """phi(x) = k.x (not periodic; always used under a compact cutoff)."""

    k: tuple

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(v) for v in np.atleast_1d(self.k)))

    @property
    def d(self) -> int:
        return len(self.k)

    def phi(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_2d(points) @ np.asarray(self.k)

    def grad(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.broadcast_to(np.asarray(self.k), pts.shape).copy()

    def hess(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.zeros((pts.shape[0], self.d, self.d))

    def phi_grid(self, grid: GridSpec) -> np.ndarray:
        out = np.zeros(grid.shape)
        for ki, x in zip(self.k, grid.coords()):
            out = out + ki * x
        return out

    def max_grad(self) -> float:
        return float(np.linalg.norm(self.k))


@dataclass(frozen=True)
class QuadraticPhase:
    """phi(x) = x.A.x/2 + b.x + c."""

    A: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(A.shape[0]))

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def phi(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return 0.5 * np.einsum("pi,ij,pj->p", pts, self.A, pts) + pts @ self.b + self.c

    def grad(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_2d(points) @ self.A.T + self.b

    def hess(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.broadcast_to(self.A, (pts.shape[0], self.d, self.d)).copy()

    def phi_grid(self, grid: GridSpec) -> np.ndarray:
        pts = grid.points()
        return self.phi(pts).reshape(grid.shape)

    def max_grad(self) -> float:
        # over the box; used only for resolution heuristics
        return float(np.linalg.norm(self.A, 2) + np.linalg.norm(self.b))


class GridPhase:
    """Smooth periodic phase given by samples on a grid.

    Gradients and Hessians are spectral; scattered-point evaluation
    synthesizes the trigonometric interpolant.
    """

    def __init__(self, field: RealField):
        self.field = field
        self.grid = field.grid
        self._grad = [g.samples for g in spectral.spectral_gradient(field)]
        hess = spectral.hessian_arr(self.grid, field.samples)
        self._hess = [[hess[i][j].real for j in range(self.grid.d)] for i in range(self.grid.d)]

    @property
    def d(self) -> int:
        return self.grid.d

    def phi(self, points: np.ndarray) -> np.ndarray:
        return spectral.eval_at_arr(self.grid, self.field.samples, points).real

    def grad(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        out = np.empty((pts.shape[0], self.d))
        for i in range(self.d):
            out[:, i] = spectral.eval_at_arr(self.grid, self._grad[i], pts).real
        return out

    def hess(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        out = np.empty((pts.shape[0], self.d, self.d))
        for i in range(self.d):
            for j in range(i, self.d):
                vals = spectral.eval_at_arr(self.grid, self._hess[i][j], pts).real
                out[:, i, j] = vals
                out[:, j, i] = vals
        return out

    def phi_grid(self, grid: GridSpec) -> np.ndarray:
        if grid == self.grid:
            return self.field.samples
        if grid.L != self.grid.L or grid.d != self.grid.d:
            raise ValueError("grid phase can only be resampled on the same box")
        return spectral.resample(self.field, grid.n).samples

    def max_grad(self) -> float:
        mags = np.zeros(self.grid.shape)
        for g in self._grad:
            mags = mags + g**2
        return float(np.sqrt(np.max(mags)))


def zero_phase(d: int) -> LinearPhase:
    return LinearPhase((0.0,) * d)
