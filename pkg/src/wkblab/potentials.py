"""External potentials: the smooth, at-most-quadratic family.

Every supported variant (zero, linear E.x, harmonic +/- w^2|x|^2/2,
general quadratic) is stored as the exact quadratic data
V(x) = x.Q.x/2 + b.x + c, so gradients and Hessians are closed-form
and the associated Hamilton-Jacobi phase is an exact time-dependent
quadratic form whose coefficients obey a small Riccati system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import GridSpec


@dataclass(frozen=True, eq=False)
class Potential:
    """V(x) = x.Q.x/2 + b.x + c with Q symmetric."""

    d: int
    Q: np.ndarray
    b: np.ndarray
    c: float = 0.0
    variant: str = "quadratic"

    def key(self) -> tuple:
        """Hashable value identity, for caching grid evaluations."""
        return (self.d, self.Q.tobytes(), self.b.tobytes(), self.c)

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float).reshape(self.d, self.d)
        if not np.allclose(Q, Q.T, atol=1e-14):
            raise ValueError("Q must be symmetric")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(self.d))

    @property
    def is_zero(self) -> bool:
        return not (self.Q.any() or self.b.any() or self.c)

    def v(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        quad = 0.5 * np.einsum("pi,ij,pj->p", pts, self.Q, pts)
        return quad + pts @ self.b + self.c

    def grad(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return pts @ self.Q.T + self.b

    def hessian(self) -> np.ndarray:
        return self.Q

    def v_grid(self, grid: GridSpec) -> np.ndarray:
        out = np.full(grid.shape, self.c)
        coords = grid.coords()
        for i in range(self.d):
            out = out + self.b[i] * coords[i]
            for j in range(self.d):
                if self.Q[i, j]:
                    out = out + 0.5 * self.Q[i, j] * coords[i] * coords[j]
        return out

    def sup_norm_on_box(self, grid: GridSpec) -> float:
        corners = np.array(
            np.meshgrid(*([[-grid.L, grid.L]] * self.d), indexing="ij")
        ).reshape(self.d, -1).T
        return float(np.max(np.abs(self.v(corners)))) if not self.is_zero else 0.0


def zero_potential(d: int) -> Potential:
    return Potential(d, np.zeros((d, d)), np.zeros(d), 0.0, variant="zero")


def linear_potential(E) -> Potential:
    E = np.atleast_1d(np.asarray(E, dtype=float))
    d = E.size
    return Potential(d, np.zeros((d, d)), E, 0.0, variant="linear")


def harmonic_potential(omega: float, d: int, sign: int = +1) -> Potential:
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    return Potential(d, sign * omega**2 * np.eye(d), np.zeros(d), 0.0, variant="harmonic")


def quadratic_potential(Q, b=None, c: float = 0.0) -> Potential:
    Q = np.asarray(Q, dtype=float)
    d = Q.shape[0]
    if b is None:
        b = np.zeros(d)
    return Potential(d, Q, b, c, variant="quadratic")


# ---------------------------------------------------------------------------
# Hamilton-Jacobi phase of the potential, as a quadratic form in x.
# phi(t,x) = x.G.x/2 + g.x + g0 solves  dphi/dt + |grad phi|^2/2 + V = 0,
# phi(0,.) = 0, as long as the Riccati matrix G stays bounded.
# ---------------------------------------------------------------------------


@dataclass
class EikonalQuadratic:
    """Time slice of the potential-generated Hamilton-Jacobi phase."""

    potential: Potential
    G: np.ndarray
    g: np.ndarray
    g0: float = 0.0

    @staticmethod
    def initial(potential: Potential) -> "EikonalQuadratic":
        d = potential.d
        return EikonalQuadratic(potential, np.zeros((d, d)), np.zeros(d), 0.0)

    def rhs(self) -> tuple:
        G, g, pot = self.G, self.g, self.potential
        dG = -G @ G - pot.Q
        dg = -G @ g - pot.b
        dg0 = -0.5 * float(g @ g) - pot.c
        return dG, dg, dg0

    def grad_grid(self, grid: GridSpec) -> list:
        """Components of grad phi = G x + g on the grid."""
        coords = grid.coords()
        out = []
        for i in range(self.potential.d):
            w = np.full(grid.shape, self.g[i])
            for j in range(self.potential.d):
                if self.G[i, j]:
                    w = w + self.G[i, j] * coords[j]
            out.append(w)
        return out

    def laplacian(self) -> float:
        return float(np.trace(self.G))

    def phi_grid(self, grid: GridSpec) -> np.ndarray:
        out = np.full(grid.shape, self.g0)
        coords = grid.coords()
        for i in range(self.potential.d):
            out = out + self.g[i] * coords[i]
            for j in range(self.potential.d):
                if self.G[i, j]:
                    out = out + 0.5 * self.G[i, j] * coords[i] * coords[j]
        return out
