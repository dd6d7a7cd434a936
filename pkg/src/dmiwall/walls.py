"""Closed-form static walls, gauge action, precessing gauge, and relaxation.

The wall family, in spherical coordinates (phi*, +-theta*) with
theta*(x) = 2 arctan(exp(-k x)), phi*(x) = -gamma x, k = sqrt(1 - gamma^2),
reads componentwise

    w+- = ( tanh(k x), +-sech(k x) cos(gamma x), -+sech(k x) sin(gamma x) ).

All wall quantities here are evaluated from these closed forms (including
their analytic x-derivatives), never by finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from dmiwall.energy import energy, energy_gradient
from dmiwall.errors import NumericalError, PreconditionError
from dmiwall.fields import MagnetizationField, project_to_sphere
from dmiwall.grid import Grid


@dataclass(frozen=True)
class Gauge:
    """Translation y along the wire plus rotation phi about it; composes additively."""

    y: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.y) and math.isfinite(self.phi)):
            raise PreconditionError("gauge components must be finite")

    def __add__(self, other: "Gauge") -> "Gauge":
        return Gauge(self.y + other.y, self.phi + other.phi)

    def __neg__(self) -> "Gauge":
        return Gauge(-self.y, -self.phi)

    @property
    def norm(self) -> float:
        return math.hypot(self.y, self.phi)


@dataclass(frozen=True)
class WallParams:
    """Member of the wall family: DMI strength, branch sign, and gauge."""

    gamma: float
    sign: int = 1
    gauge: Gauge = Gauge()

    def __post_init__(self):
        if self.gamma * self.gamma >= 1.0:
            raise PreconditionError("gamma out of range")
        if self.sign not in (1, -1):
            raise PreconditionError("sign must be +1 or -1")


@dataclass(frozen=True)
class AppliedField:
    """Piecewise-constant applied-field schedule h(t), left-continuous at jumps."""

    times: np.ndarray = dc_field(repr=False)
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise PreconditionError("schedule arrays must be equal-length 1D")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise PreconditionError("schedule times must start at 0 and increase strictly")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise PreconditionError("schedule must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, h: float) -> "AppliedField":
        return cls(np.array([0.0]), np.array([float(h)]))

    @classmethod
    def from_csv(cls, path) -> "AppliedField":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])

    def value_at(self, t: float) -> float:
        """h(t); at a jump instant the left limit is returned."""
        idx = int(np.searchsorted(self.times, t, side="left")) - 1
        return float(self.values[max(idx, 0)])

    def integral(self, t: float) -> float:
        """Exact int_0^t h(s) ds for the piecewise-constant schedule."""
        if t < 0:
            raise PreconditionError("negative time")
        total = 0.0
        for i, (ti, vi) in enumerate(zip(self.times, self.values)):
            t_next = self.times[i + 1] if i + 1 < self.times.size else math.inf
            if t <= ti:
                break
            total += vi * (min(t, t_next) - ti)
        return total


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def k_gamma(gamma: float) -> float:
    if gamma * gamma >= 1.0:
        raise PreconditionError("gamma out of range")
    return math.sqrt(1.0 - gamma * gamma)


def theta_star(x: np.ndarray, gamma: float) -> np.ndarray:
    return 2.0 * np.arctan(np.exp(-k_gamma(gamma) * x))


def wall_values(x: np.ndarray, gamma: float, sign: int = 1) -> np.ndarray:
    k = k_gamma(gamma)
    sech = 1.0 / np.cosh(k * x)
    return np.stack(
        [
            np.tanh(k * x),
            sign * sech * np.cos(gamma * x),
            -sign * sech * np.sin(gamma * x),
        ],
        axis=1,
    )


def wall_derivative(x: np.ndarray, gamma: float, sign: int = 1) -> np.ndarray:
    """Analytic dx w*."""
    k = k_gamma(gamma)
    sech, th = 1.0 / np.cosh(k * x), np.tanh(k * x)
    c, s = np.cos(gamma * x), np.sin(gamma * x)
    return np.stack(
        [
            k * sech**2,
            sign * (-k * sech * th * c - gamma * sech * s),
            -sign * (-k * sech * th * s + gamma * sech * c),
        ],
        axis=1,
    )


def wall_second_derivative(x: np.ndarray, gamma: float, sign: int = 1) -> np.ndarray:
    """Analytic dxx w*."""
    k = k_gamma(gamma)
    sech, th = 1.0 / np.cosh(k * x), np.tanh(k * x)
    c, s = np.cos(gamma * x), np.sin(gamma * x)
    sd = sech * (sech**2 - th**2)  # (sech tanh)' / k
    return np.stack(
        [
            -2.0 * k**2 * sech**2 * th,
            sign * (-k**2 * sd * c + 2.0 * k * gamma * sech * th * s - gamma**2 * sech * c),
            -sign * (-k**2 * sd * s - 2.0 * k * gamma * sech * th * c - gamma**2 * sech * s),
        ],
        axis=1,
    )


def apply_gauge_closed_form(x: np.ndarray, p: WallParams) -> np.ndarray:
    """(g.w+-)(x) = R_phi w+-(x - y), sampled from the closed form."""
    m = wall_values(x - p.gauge.y, p.gamma, p.sign)
    c, s = math.cos(p.gauge.phi), math.sin(p.gauge.phi)
    out = m.copy()
    out[:, 1] = c * m[:, 1] - s * m[:, 2]
    out[:, 2] = s * m[:, 1] + c * m[:, 2]
    return out


def wall_profile(p: WallParams, grid: Grid) -> MagnetizationField:
    """Sample g.w+- on the grid (exactly unit-norm)."""
    vals = apply_gauge_closed_form(grid.x, p)
    return project_to_sphere(grid, vals)


def wall_frame(gamma: float, grid: Grid):
    """Direct orthonormal frame (w*, n*, p*) for the sign=+ wall."""
    x = grid.x
    th = theta_star(x, gamma)
    ph = -gamma * x
    ct, st = np.cos(th), np.sin(th)
    cp, sp = np.cos(ph), np.sin(ph)
    w = np.stack([ct, st * cp, st * sp], axis=1)
    n = np.stack([-st, ct * cp, ct * sp], axis=1)
    p = np.stack([np.zeros_like(x), -sp, cp], axis=1)
    return w, n, p


def wall_identities(gamma: float, grid: Grid) -> dict:
    """Trapezoid values of the three closed-form wall integrals.

    Targets: i1 = 2/k, i2 = -2 gamma / k, i3 = -2 with k = sqrt(1-gamma^2).
    """
    x = grid.x
    w = wall_values(x, gamma)
    dw = wall_derivative(x, gamma)
    e1xw = np.stack([np.zeros_like(x), -w[:, 2], w[:, 1]], axis=1)
    i1 = grid.trapezoid(np.einsum("ij,ij->i", e1xw, e1xw))
    i2 = grid.trapezoid(np.einsum("ij,ij->i", e1xw, dw))
    w_x_wxe1 = np.cross(w, np.cross(w, np.array([1.0, 0.0, 0.0])))
    i3 = grid.trapezoid(np.einsum("ij,ij->i", w_x_wxe1, dw))
    return {"i1": i1, "i2": i2, "i3": i3}


def first_order_residual(m: MagnetizationField, gamma: float) -> float:
    """L-inf defect of dx m = k m x (e1 x m) - gamma e1 x m (central differences).

    Evaluated on interior points; the boundary rows lack a symmetric stencil.
    """
    k = k_gamma(gamma)
    v = m.values
    dm = (v[2:] - v[:-2]) / (2.0 * m.grid.spacing)
    mid = v[1:-1]
    e1 = np.array([1.0, 0.0, 0.0])
    rhs = k * np.cross(mid, np.cross(e1, mid)) - gamma * np.cross(e1, mid)
    return float(np.abs(dm - rhs).max())


def theta_ode_residual(gamma: float, grid: Grid) -> dict:
    """Residual of dx theta* = -k sin theta*, analytically and by central FD."""
    k = k_gamma(gamma)
    x = grid.x
    th = theta_star(x, gamma)
    dth_exact = -k / np.cosh(k * x)
    analytic = float(np.abs(dth_exact + k * np.sin(th)).max())
    dth_fd = (th[2:] - th[:-2]) / (2.0 * grid.spacing)
    fd = float(np.abs(dth_fd + k * np.sin(th[1:-1])).max())
    return {"analytic": analytic, "fd": fd}


def precessing_gauge(h: AppliedField, alpha: float, gamma: float, t: float) -> Gauge:
    """Exact gauge of the precessing wall: y* = -(alpha/k) int h, phi* = (-1 + alpha gamma / k) int h."""
    if t < 0:
        raise PreconditionError("negative time")
    k = k_gamma(gamma)
    ih = h.integral(t)
    return Gauge(y=-alpha / k * ih, phi=(-1.0 + alpha * gamma / k) * ih)


# ---------------------------------------------------------------------------
# energy relaxation
# ---------------------------------------------------------------------------

def criticality_residual(m: MagnetizationField, gamma: float) -> float:
    """|| m x deltaE(m) ||_inf, zero exactly on critical points."""
    return float(np.abs(np.cross(m.values, energy_gradient(m, gamma))).max())


def relax_to_wall(
    m0: MagnetizationField,
    gamma: float,
    max_steps: int = 20000,
    tol: float = 1e-6,
) -> MagnetizationField:
    """Projected gradient descent until ||m x deltaE||_inf < tol or max_steps.

    Step control: start at 0.4 dx^2, halve on energy increase (50 consecutive
    failures abort with "no descent"), grow by 1.1 on success.
    """
    b1 = abs(abs(m0.values[0, 0]) - 1.0)
    b2 = abs(abs(m0.values[-1, 0]) - 1.0)
    if max(b1, b2) > 0.1:
        raise PreconditionError("boundary values must be within 0.1 of +-e1")
    m = m0
    tau = 0.4 * m0.grid.spacing**2
    e_cur = energy(m, gamma).total
    fails = 0
    for _ in range(max_steps):
        if criticality_residual(m, gamma) < tol:
            break
        g = energy_gradient(m, gamma)
        trial = project_to_sphere(m.grid, m.values - tau * g)
        e_trial = energy(trial, gamma).total
        if e_trial <= e_cur:
            m, e_cur = trial, e_trial
            tau *= 1.1
            fails = 0
        else:
            tau *= 0.5
            fails += 1
            if fails >= 50:
                raise NumericalError("no descent")
    return m
