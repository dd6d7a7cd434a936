"""Sphere-valued field containers, spherical coordinates, and discrete norms."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from dmiwall.errors import PreconditionError
from dmiwall.grid import Grid

UNIT_NORM_TOL = 1e-12
POLE_TOL = 1e-6
VANISHING_TOL = 1e-8

E1 = np.array([1.0, 0.0, 0.0])


def _as_field_array(grid: Grid, values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (grid.n_points, 3):
        raise PreconditionError(f"field shape {v.shape} does not match grid ({grid.n_points}, 3)")
    return v


@dataclass(frozen=True)
class MagnetizationField:
    """Unit-vector field on a grid; |values_i| = 1 within 1e-12 is enforced."""

    grid: Grid
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = _as_field_array(self.grid, self.values)
        defect = np.abs(np.linalg.norm(v, axis=1) - 1.0).max()
        if defect > UNIT_NORM_TOL:
            raise PreconditionError(f"field is not unit-norm (defect {defect:.3e})")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x


@dataclass(frozen=True)
class TangentField:
    """Vector field meant to be pointwise orthogonal to a base magnetization."""

    grid: Grid
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = _as_field_array(self.grid, self.values).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SphericalField:
    """Colatitude theta in (0, pi) and a continuous azimuth lifting phi."""

    grid: Grid
    theta: np.ndarray = dc_field(repr=False)
    phi: np.ndarray = dc_field(repr=False)


def project_to_sphere(grid: Grid, values: np.ndarray) -> MagnetizationField:
    """Normalize pointwise; rejects vectors with |f_i| <= 1e-8."""
    v = _as_field_array(grid, values)
    norms_ = np.linalg.norm(v, axis=1)
    if norms_.min() <= VANISHING_TOL:
        raise PreconditionError("vanishing vector: cannot project to sphere")
    return MagnetizationField(grid, v / norms_[:, None])


def check_tangent(m: MagnetizationField, v: TangentField) -> None:
    """Raise unless v is pointwise orthogonal to m within 1e-12 (relative)."""
    dots = np.abs(np.einsum("ij,ij->i", m.values, v.values))
    scale = 1.0 + np.linalg.norm(v.values, axis=1)
    if (dots / scale).max() > UNIT_NORM_TOL:
        raise PreconditionError("not tangent")


def exp_map_perturb(m: MagnetizationField, v: TangentField) -> MagnetizationField:
    """Geodesic perturbation m' = cos|v| m + sin|v| v/|v| (identity where v = 0)."""
    if v.grid is not m.grid and v.grid != m.grid:
        raise PreconditionError("tangent field lives on a different grid")
    check_tangent(m, v)
    amp = np.linalg.norm(v.values, axis=1)
    small = amp < 1e-30
    safe = np.where(small, 1.0, amp)
    out = np.cos(amp)[:, None] * m.values + (np.sin(amp) / safe)[:, None] * v.values
    projected = project_to_sphere(m.grid, out).values.copy()
    projected[small] = m.values[small]  # exact identity where v vanishes
    return MagnetizationField(m.grid, projected)


def to_spherical(m: MagnetizationField, pole_tol: float = POLE_TOL) -> SphericalField:
    """Continuous spherical coordinates; phi at the leftmost point lies in (-pi, pi].

    Requires pole avoidance: 1 - |m1| >= pole_tol everywhere. Wall-type fields
    approach the poles exponentially in their tails, where the coordinates
    remain numerically stable, so internal callers pass a machine-level
    tolerance instead of the default guard.
    """
    m1 = m.values[:, 0]
    if (1.0 - np.abs(m1)).min() < pole_tol:
        raise PreconditionError("pole touched")
    theta = np.arccos(np.clip(m1, -1.0, 1.0))
    phi = np.unwrap(np.arctan2(m.values[:, 2], m.values[:, 1]))
    # np.unwrap keeps the first sample, which atan2 already puts in (-pi, pi].
    if phi[0] <= -np.pi:
        phi = phi + 2.0 * np.pi
    return SphericalField(m.grid, theta, phi)


def from_spherical(sf: SphericalField) -> MagnetizationField:
    """Reconstruct m = (cos theta, sin theta cos phi, sin theta sin phi)."""
    st = np.sin(sf.theta)
    vals = np.stack([np.cos(sf.theta), st * np.cos(sf.phi), st * np.sin(sf.phi)], axis=1)
    return MagnetizationField(sf.grid, vals)


def norms(grid: Grid, values: np.ndarray) -> dict:
    """Discrete L2/H1/H2 seminorms of a (possibly non-unit) vector field.

    l2 uses trapezoidal quadrature, h1dot forward differences, h2dot the
    central 3-point second difference on interior points.
    """
    f = _as_field_array(grid, values)
    dx = grid.spacing
    w = grid.trapezoid_weights
    sq = np.einsum("ij,ij->i", f, f)
    l2 = float(np.sqrt(w @ sq))
    d = (f[1:] - f[:-1]) / dx
    h1dot = float(np.sqrt(np.einsum("ij,ij->", d, d) * dx))
    dd = np.empty_like(f)
    dd[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dx**2
    # one-sided 2nd-order stencils keep the quadrature domain complete
    dd[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / dx**2
    dd[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / dx**2
    h2dot = float(np.sqrt(w @ np.einsum("ij,ij->i", dd, dd)))
    linf = float(np.sqrt(sq.max()))
    return {
        "l2": l2,
        "h1dot": h1dot,
        "h2dot": h2dot,
        "h1": float(np.hypot(l2, h1dot)),
        "linf": linf,
    }


def h1_norm(grid: Grid, values: np.ndarray) -> float:
    """sqrt(l2^2 + h1dot^2) of a vector field (shorthand used all over)."""
    return norms(grid, values)["h1"]


def seminorm_calH1(m: MagnetizationField) -> float:
    """||m2||_L2 + ||m3||_L2 + ||dx m||_L2, the transition-layer energy topology."""
    w = m.grid.trapezoid_weights
    n2 = float(np.sqrt(w @ m.values[:, 1] ** 2))
    n3 = float(np.sqrt(w @ m.values[:, 2] ** 2))
    d = (m.values[1:] - m.values[:-1]) / m.grid.spacing
    nd = float(np.sqrt(np.einsum("ij,ij->", d, d) * m.grid.spacing))
    return n2 + n3 + nd


def rotate_about_e1(values: np.ndarray, phi: float) -> np.ndarray:
    """Pointwise rotation about the wire axis by angle phi."""
    c, s = np.cos(phi), np.sin(phi)
    out = np.array(values, dtype=float, copy=True)
    out[:, 1] = c * values[:, 1] - s * values[:, 2]
    out[:, 2] = s * values[:, 1] + c * values[:, 2]
    return out


def write_field_csv(path, m: MagnetizationField) -> None:
    """Serialize as `x,m1,m2,m3` rows at full double precision."""
    with open(path, "w") as fh:
        fh.write("x,m1,m2,m3\n")
        for xi, row in zip(m.grid.x, m.values):
            fh.write(f"{xi:.17g},{row[0]:.17g},{row[1]:.17g},{row[2]:.17g}\n")


def read_field_csv(path) -> MagnetizationField:
    """Inverse of write_field_csv; infers the grid from the x column."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    x = data[:, 0]
    half_length = 0.5 * (x[-1] - x[0])
    grid = Grid(half_length, x.size)
    if not np.allclose(grid.x, x - (x[0] + half_length), atol=1e-10):
        raise PreconditionError("field CSV is not on a uniform symmetric grid")
    return MagnetizationField(grid, data[:, 1:4])
