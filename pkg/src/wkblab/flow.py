"""Classical Hamiltonian flow, Jacobi determinants, and the
Hamilton-Jacobi phase constructed along characteristics.

Trajectories solve xdot = xi, xidot = -grad V(x) from every grid point,
with launch momenta xi(0,y) = grad phi0(y); the deformation matrix
M = d x/d y and its determinant J are integrated alongside through the
variational equation.  Because every supported potential is quadratic,
the flow map is affine in (y, grad phi0(y)); the fundamental affine
data and the quadratic form giving the classical action are integrated
with the same RK4 steps, which makes off-launch evaluation and Newton
inversion of y -> x(t,y) exact up to integrator accuracy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .grids import GridSpec, RealField
from .potentials import Potential


class NearCausticError(RuntimeError):
    """Newton inversion of the flow map failed to converge."""


@dataclass
class AffineFlow:
    """x = A y + B g + p, xi = C y + D g + q, g = grad phi0(y);
    action = z.W.z/2 + u.z + s0 with z = (y, g)."""

    A: np.ndarray
    B: np.ndarray
    p: np.ndarray
    C: np.ndarray
    D: np.ndarray
    q: np.ndarray
    W: np.ndarray
    u: np.ndarray
    s0: float

    @staticmethod
    def initial(d: int) -> "AffineFlow":
        eye = np.eye(d)
        zer = np.zeros((d, d))
        return AffineFlow(
            A=eye.copy(), B=zer.copy(), p=np.zeros(d),
            C=zer.copy(), D=eye.copy(), q=np.zeros(d),
            W=np.zeros((2 * d, 2 * d)), u=np.zeros(2 * d), s0=0.0,
        )

    def x_of(self, y: np.ndarray, g: np.ndarray) -> np.ndarray:
        return y @ self.A.T + g @ self.B.T + self.p

    def xi_of(self, y: np.ndarray, g: np.ndarray) -> np.ndarray:
        return y @ self.C.T + g @ self.D.T + self.q

    def deformation(self, hess: np.ndarray) -> np.ndarray:
        """M(y) = A + B hess(y) for a batch of phase Hessians."""
        return self.A[None, :, :] + np.einsum("ij,njk->nik", self.B, hess)

    def action_of(self, y: np.ndarray, g: np.ndarray) -> np.ndarray:
        z = np.concatenate([y, g], axis=1)
        return 0.5 * np.einsum("ni,ij,nj->n", z, self.W, z) + z @ self.u + self.s0


def _affine_rhs(st: AffineFlow, pot: Potential) -> AffineFlow:
    Q, b, c = pot.Q, pot.b, pot.c
    X = np.concatenate([st.A, st.B], axis=1)
    Xi = np.concatenate([st.C, st.D], axis=1)
    dW = Xi.T @ Xi - X.T @ (Q @ X)
    du = Xi.T @ st.q - X.T @ (Q @ st.p) - X.T @ b
    ds0 = 0.5 * float(st.q @ st.q) - 0.5 * float(st.p @ (Q @ st.p)) - float(b @ st.p) - c
    return AffineFlow(
        A=st.C, B=st.D, p=st.q,
        C=-(Q @ st.A), D=-(Q @ st.B), q=-(Q @ st.p + b),
        W=dW, u=du, s0=ds0,
    )


def _affine_step(st: AffineFlow, pot: Potential, h: float) -> AffineFlow:
    k1 = _affine_rhs(st, pot)
    k2 = _affine_rhs(_affine_axpy(st, k1, 0.5 * h), pot)
    k3 = _affine_rhs(_affine_axpy(st, k2, 0.5 * h), pot)
    k4 = _affine_rhs(_affine_axpy(st, k3, h), pot)
    out = st
    for k, w in ((k1, h / 6), (k2, h / 3), (k3, h / 3), (k4, h / 6)):
        out = _affine_axpy(out, k, w)
    return out


def _affine_axpy(st: AffineFlow, dst: AffineFlow, w: float) -> AffineFlow:
    return AffineFlow(
        A=st.A + w * dst.A, B=st.B + w * dst.B, p=st.p + w * dst.p,
        C=st.C + w * dst.C, D=st.D + w * dst.D, q=st.q + w * dst.q,
        W=st.W + w * dst.W, u=st.u + w * dst.u, s0=st.s0 + w * dst.s0,
    )


@dataclass
class TrajectoryBundle:
    grid: GridSpec
    potential: Potential
    phase0: object
    times: np.ndarray
    x: np.ndarray        # (nt, N, d)
    xi: np.ndarray       # (nt, N, d)
    M: np.ndarray        # (nt, N, d, d)
    J: np.ndarray        # (nt, N)
    action: np.ndarray   # (nt, N)
    affine: list         # AffineFlow per stored time
    dt_ode: float
    j_min: float
    horizon: float = field(default=np.inf)

    @property
    def launches(self) -> np.ndarray:
        return self.grid.points()

    def valid_index(self) -> int:
        """Number of stored times with min J above the threshold."""
        for i in range(len(self.times)):
            if self.J[i].min() <= self.j_min:
                return i
        return len(self.times)


def integrate_flow(potential: Potential, phase0, T: float, grid: GridSpec,
                   dt_ode: float = 1e-3, times=None, j_min: float = 0.05) -> TrajectoryBundle:
    """RK4 flow of xdot = xi, xidot = -grad V from all grid points.

    The variational system Mdot = P, Pdot = -Hess V(x) M rides along,
    as do the affine fundamental data used later for inversion.  The
    bundle is flagged with the first time min_y J drops to j_min.
    """
    if times is None:
        times = np.linspace(0.0, T, 26)
    times = np.asarray(sorted(float(t) for t in times))
    if times[0] != 0.0:
        times = np.concatenate([[0.0], times])
    d = grid.d
    y = grid.points()
    N = y.shape[0]
    Q = potential.Q
    hess0 = phase0.hess(y)

    x = y.copy()
    xi = phase0.grad(y)
    M = np.broadcast_to(np.eye(d), (N, d, d)).copy()
    P = hess0.copy()
    act = np.zeros(N)
    aff = AffineFlow.initial(d)

    def rhs(x, xi, M, P, act):
        dact = 0.5 * np.sum(xi**2, axis=1) - potential.v(x)
        return (xi, -(x @ Q.T + potential.b), P,
                -np.einsum("ij,njk->nik", Q, M), dact)

    def rk4(x, xi, M, P, act, h):
        k1 = rhs(x, xi, M, P, act)
        k2 = rhs(x + 0.5 * h * k1[0], xi + 0.5 * h * k1[1], M + 0.5 * h * k1[2],
                 P + 0.5 * h * k1[3], act + 0.5 * h * k1[4])
        k3 = rhs(x + 0.5 * h * k2[0], xi + 0.5 * h * k2[1], M + 0.5 * h * k2[2],
                 P + 0.5 * h * k2[3], act + 0.5 * h * k2[4])
        k4 = rhs(x + h * k3[0], xi + h * k3[1], M + h * k3[2],
                 P + h * k3[3], act + h * k3[4])
        h6, h3 = h / 6.0, h / 3.0
        return (x + h6 * k1[0] + h3 * k2[0] + h3 * k3[0] + h6 * k4[0],
                xi + h6 * k1[1] + h3 * k2[1] + h3 * k3[1] + h6 * k4[1],
                M + h6 * k1[2] + h3 * k2[2] + h3 * k3[2] + h6 * k4[2],
                P + h6 * k1[3] + h3 * k2[3] + h3 * k3[3] + h6 * k4[3],
                act + h6 * k1[4] + h3 * k2[4] + h3 * k3[4] + h6 * k4[4])

    xs, xis, Ms, Js, acts, affs = [], [], [], [], [], []

    def record():
        xs.append(x.copy())
        xis.append(xi.copy())
        Ms.append(M.copy())
        Js.append(np.linalg.det(M))
        acts.append(act.copy())
        affs.append(aff)

    t = 0.0
    record()
    for t_next in times[1:]:
        seg = t_next - t
        nsteps = max(1, int(np.ceil(seg / dt_ode - 1e-12)))
        h = seg / nsteps
        for _ in range(nsteps):
            x, xi, M, P, act = rk4(x, xi, M, P, act, h)
            aff = _affine_step(aff, potential, h)
        t = float(t_next)
        record()

    J = np.stack(Js)
    bundle = TrajectoryBundle(
        grid=grid, potential=potential, phase0=phase0, times=times,
        x=np.stack(xs), xi=np.stack(xis), M=np.stack(Ms), J=J,
        action=np.stack(acts), affine=affs, dt_ode=dt_ode, j_min=j_min,
    )
    bad = np.nonzero(J.min(axis=1) <= j_min)[0]
    # horizon = last stored time before the determinant threshold crossing
    bundle.horizon = float(times[max(bad[0] - 1, 0)]) if bad.size else float(times[-1])
    return bundle


def jacobian_bounds(bundle: TrajectoryBundle) -> tuple:
    """(min J, max J, horizon) over the stored times and launches."""
    return float(bundle.J.min()), float(bundle.J.max()), bundle.horizon


def invert_flow(bundle: TrajectoryBundle, time_index: int, targets: np.ndarray,
                tol: float = 1e-11, max_iter: int = 20) -> np.ndarray:
    """Solve x(t, y) = target for y, seeded by the nearest launch point."""
    aff = bundle.affine[time_index]
    phase0 = bundle.phase0
    tree = cKDTree(bundle.x[time_index])
    _, idx = tree.query(targets)
    y = bundle.launches[idx].astype(float).copy()
    for _ in range(max_iter):
        g = phase0.grad(y)
        res = aff.x_of(y, g) - targets
        if np.max(np.abs(res)) < tol:
            return y
        Mloc = aff.deformation(phase0.hess(y))
        y = y - np.linalg.solve(Mloc, res[..., None])[..., 0]
    raise NearCausticError(
        f"flow inversion stalled at t={bundle.times[time_index]:.6g} "
        f"(residual {np.max(np.abs(res)):.3g})"
    )


@dataclass
class EikonalPhase:
    grid: GridSpec
    times: np.ndarray
    fields: list          # RealField per time
    T_flow: float

    def field_at(self, t: float) -> RealField:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.fields[i]


def eikonal_phase(bundle: TrajectoryBundle, potential: Potential, phase0) -> EikonalPhase:
    """Hamilton-Jacobi phase on the grid: action carried along the
    trajectory through each target, evaluated via flow inversion."""
    nvalid = bundle.valid_index()
    targets = bundle.grid.points()
    fields = []
    for i in range(nvalid):
        y = invert_flow(bundle, i, targets)
        g = phase0.grad(y)
        phi = phase0.phi(y) + bundle.affine[i].action_of(y, g)
        fields.append(RealField(bundle.grid, phi.reshape(bundle.grid.shape)))
    return EikonalPhase(
        grid=bundle.grid, times=bundle.times[:nvalid], fields=fields,
        T_flow=float(bundle.times[nvalid - 1]) if nvalid else 0.0,
    )


def flow_to_csv(bundle: TrajectoryBundle, path) -> None:
    d = bundle.grid.d
    cols = (["t"] + [f"y{i}" for i in range(d)] + [f"x{i}" for i in range(d)]
            + [f"xi{i}" for i in range(d)] + ["J"])
    launches = bundle.launches
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for it, t in enumerate(bundle.times):
            for n in range(launches.shape[0]):
                row = [repr(float(t))]
                row += [repr(float(v)) for v in launches[n]]
                row += [repr(float(v)) for v in bundle.x[it, n]]
                row += [repr(float(v)) for v in bundle.xi[it, n]]
                row.append(repr(float(bundle.J[it, n])))
                writer.writerow(row)
