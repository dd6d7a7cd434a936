"""1D micromagnetic domain-wall laboratory.

Simulates the damped Landau-Lifshitz-Gilbert flow with Dzyaloshinskii-Moriya
interaction on a finite nanowire segment, provides the closed-form static and
precessing wall family, gauge modulation, the linearized Schroedinger operator,
and experiment drivers with CSV/figure reporting.
"""

from dmiwall.errors import NumericalError, PreconditionError
from dmiwall.grid import Grid, default_half_length, make_grid
from dmiwall.fields import (
    MagnetizationField,
    SphericalField,
    TangentField,
    exp_map_perturb,
    from_spherical,
    norms,
    project_to_sphere,
    seminorm_calH1,
    to_spherical,
)
from dmiwall.walls import AppliedField, Gauge, WallParams, precessing_gauge, wall_profile

__version__ = "0.1.0"

__all__ = [
    "AppliedField",
    "Gauge",
    "Grid",
    "MagnetizationField",
    "NumericalError",
    "PreconditionError",
    "SphericalField",
    "TangentField",
    "WallParams",
    "default_half_length",
    "exp_map_perturb",
    "from_spherical",
    "make_grid",
    "norms",
    "precessing_gauge",
    "project_to_sphere",
    "seminorm_calH1",
    "to_spherical",
    "wall_profile",
]
