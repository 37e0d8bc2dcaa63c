"""Periodic tensor grids on [-L, L)^d and sampled fields.

Everything downstream (solvers, flows, hierarchies, phase-space
transforms) works on these three objects: a GridSpec describing the
box, ComplexField/RealField holding row-major samples, and SupportBox
describing an axis-aligned compact-support region.  Fields are treated
as immutable values: operations return new fields and never mutate
their inputs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi


class ResolutionError(ValueError):
    """A grid is too coarse for the requested field or phase scale."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-L, L)^d with n points per axis."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if not _is_power_of_two(self.n) or self.n < 16:
            raise ValueError(f"n must be a power of two >= 16, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    def axis(self) -> np.ndarray:
        """1D coordinate axis x_i = -L + i*dx."""
        return -self.L + self.dx * np.arange(self.n)

    def k_axis(self) -> np.ndarray:
        """Angular wavenumbers matching numpy's FFT layout (pi*m/L)."""
        return TWO_PI * np.fft.fftfreq(self.n, d=self.dx)

    def coords(self) -> list:
        """d broadcastable coordinate arrays over the grid."""
        return list(_mesh(self, physical=True))

    def kgrid(self) -> list:
        """d broadcastable wavenumber arrays over the grid."""
        return list(_mesh(self, physical=False))

    def points(self) -> np.ndarray:
        """All grid points as an (n^d, d) array, row-major."""
        mesh = np.meshgrid(*(self.axis() for _ in range(self.d)), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@lru_cache(maxsize=32)
def _mesh(grid: GridSpec, physical: bool) -> tuple:
    ax = grid.axis() if physical else grid.k_axis()
    out = []
    for i in range(grid.d):
        shape = [1] * grid.d
        shape[i] = grid.n
        out.append(ax.reshape(shape))
    return tuple(out)


def make_grid(d: int, n: int, L: float) -> GridSpec:
    return GridSpec(d=d, n=n, L=float(L))


def _check_samples(grid: GridSpec, samples: np.ndarray, dtype) -> np.ndarray:
    arr = np.ascontiguousarray(samples, dtype=dtype)
    if arr.shape != grid.shape:
        raise ValueError(f"samples shape {arr.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(arr.view(np.float64) if dtype == np.complex128 else arr)):
        raise ValueError("field contains non-finite samples")
    return arr


@dataclass
class ComplexField:
    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        self.samples = _check_samples(self.grid, self.samples, np.complex128)

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.samples.copy())

    @staticmethod
    def zeros(grid: GridSpec) -> "ComplexField":
        return ComplexField(grid, np.zeros(grid.shape, dtype=np.complex128))

    @staticmethod
    def from_function(grid: GridSpec, fn) -> "ComplexField":
        return ComplexField(grid, np.asarray(fn(*grid.coords()), dtype=np.complex128))


@dataclass
class RealField:
    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        self.samples = _check_samples(self.grid, self.samples, np.float64)

    def copy(self) -> "RealField":
        return RealField(self.grid, self.samples.copy())

    def as_complex(self) -> ComplexField:
        return ComplexField(self.grid, self.samples.astype(np.complex128))

    @staticmethod
    def zeros(grid: GridSpec) -> "RealField":
        return RealField(grid, np.zeros(grid.shape, dtype=np.float64))

    @staticmethod
    def from_function(grid: GridSpec, fn) -> "RealField":
        return RealField(grid, np.asarray(fn(*grid.coords()), dtype=np.float64))


@dataclass(frozen=True)
class SupportBox:
    """Axis-aligned box |x_i - center_i| <= radius_i."""

    center: tuple
    radius: tuple

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        object.__setattr__(self, "radius", tuple(float(r) for r in np.atleast_1d(self.radius)))
        if len(self.center) != len(self.radius):
            raise ValueError("center and radius must have the same dimension")
        if any(r <= 0 for r in self.radius):
            raise ValueError("box radius must be positive componentwise")

    @property
    def d(self) -> int:
        return len(self.center)

    def dilate(self, margin: float) -> "SupportBox":
        return SupportBox(self.center, tuple(r + margin for r in self.radius))

    def gap_to(self, other: "SupportBox") -> float:
        """Largest per-axis separation between the two boxes (< 0 overlap)."""
        gaps = [
            abs(self.center[i] - other.center[i]) - self.radius[i] - other.radius[i]
            for i in range(self.d)
        ]
        return max(gaps)

    def margin_inside(self, grid: GridSpec) -> float:
        """Distance from the box to the periodic boundary (can be negative)."""
        return min(
            grid.L - abs(self.center[i]) - self.radius[i] for i in range(self.d)
        )

    def indicator(self, grid: GridSpec) -> np.ndarray:
        inside = np.ones(grid.shape, dtype=bool)
        for i, x in enumerate(grid.coords()):
            inside &= np.abs(x - self.center[i]) <= self.radius[i]
        return inside


def bump(grid: GridSpec, center, radius, height: float = 1.0) -> RealField:
    """Smooth compactly supported bump height*exp(-1/(1-r^2)), r < 1.

    r is the anisotropic radius |(x-center)/radius|; the profile and all
    its derivatives vanish on the support boundary.  The support box
    must stay at least 4*dx away from the periodic boundary.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    radius_arr = np.broadcast_to(np.atleast_1d(np.asarray(radius, dtype=float)), (grid.d,))
    box = SupportBox(tuple(center), tuple(radius_arr))
    if box.margin_inside(grid) < 4 * grid.dx:
        raise ValueError(
            f"bump support {box} is closer than 4*dx={4*grid.dx:.3g} to the boundary"
        )
    r2 = np.zeros(grid.shape)
    for i, x in enumerate(grid.coords()):
        r2 = r2 + ((x - center[i]) / radius_arr[i]) ** 2
    out = np.zeros(grid.shape)
    inside = r2 < 1.0
    out[inside] = height * np.exp(-1.0 / (1.0 - r2[inside]))
    return RealField(grid, out)


def norm(field, kind: str = "l2", s: float = 0.0) -> float:
    """Grid norm of a field.

    kind: "l2" (quadrature), "linf", "hs" (Fourier multiplier
    (1+|k|^2)^(s/2)), or "l2linf" = max(L2, Linf).
    """
    f = field.samples
    grid = field.grid
    kind = kind.lower()
    if kind == "linf":
        return float(np.max(np.abs(f))) if f.size else 0.0
    if kind == "l2":
        return float(np.sqrt(np.sum(np.abs(f) ** 2) * grid.cell_volume))
    if kind == "l2linf":
        return max(norm(field, "l2"), norm(field, "linf"))
    if kind == "hs":
        if s < 0:
            raise ValueError("Hs norm requires s >= 0")
        fh = np.fft.fftn(f)
        k2 = np.zeros(grid.shape)
        for k in grid.kgrid():
            k2 = k2 + k**2
        weight = (1.0 + k2) ** s
        total = np.sum(weight * np.abs(fh) ** 2) * grid.cell_volume / grid.size
        return float(np.sqrt(total))
    raise ValueError(f"unknown norm kind {kind!r}")


def diff_norm(f, g, kind: str = "l2linf") -> float:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return norm(ComplexField(f.grid, f.samples.astype(np.complex128) - g.samples), kind)


def mass_outside(field, box: SupportBox) -> float:
    """Fraction of L2 mass outside the box (0 for the zero field)."""
    f = field.samples
    total = np.sum(np.abs(f) ** 2)
    if total == 0.0:
        return 0.0
    inside = box.indicator(field.grid)
    out = np.sum(np.abs(f[~inside]) ** 2)
    return float(out / total)


# ---------------------------------------------------------------------------
# Field dump format: magic "WKBF1", u8 dimension, u32le n per axis,
# f64le L, then n^d little-endian (re, im) f64 pairs in row-major order.
# ---------------------------------------------------------------------------

FIELD_MAGIC = b"WKBF1"


def dump_field(field, path) -> None:
    grid = field.grid
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<B", grid.d))
        for _ in range(grid.d):
            fh.write(struct.pack("<I", grid.n))
        fh.write(struct.pack("<d", grid.L))
        data = np.ascontiguousarray(field.samples, dtype=np.complex128)
        pairs = np.empty(grid.size * 2, dtype="<f8")
        pairs[0::2] = data.real.ravel()
        pairs[1::2] = data.imag.ravel()
        fh.write(pairs.tobytes())


def load_field(path) -> ComplexField:
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != FIELD_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {FIELD_MAGIC!r}")
        (d,) = struct.unpack("<B", fh.read(1))
        ns = [struct.unpack("<I", fh.read(4))[0] for _ in range(d)]
        if len(set(ns)) != 1:
            raise ValueError(f"anisotropic grids are not supported, got n={ns}")
        (L,) = struct.unpack("<d", fh.read(8))
        grid = GridSpec(d=d, n=ns[0], L=L)
        raw = np.frombuffer(fh.read(grid.size * 16), dtype="<f8")
        samples = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
        return ComplexField(grid, samples)
