"""wkblab: numerical laboratory for semiclassical WKB analysis of cubic NLS."""

__version__ = "0.1.0"

from .grids import (
    ComplexField,
    GridSpec,
    RealField,
    SupportBox,
    bump,
    diff_norm,
    dump_field,
    load_field,
    make_grid,
    mass_outside,
    norm,
)
from .potentials import (
    Potential,
    harmonic_potential,
    linear_potential,
    quadratic_potential,
    zero_potential,
)

__all__ = [
    "ComplexField",
    "GridSpec",
    "RealField",
    "SupportBox",
    "bump",
    "diff_norm",
    "dump_field",
    "load_field",
    "make_grid",
    "mass_outside",
    "norm",
    "Potential",
    "harmonic_potential",
    "linear_potential",
    "quadratic_potential",
    "zero_potential",
]
