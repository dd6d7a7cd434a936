import numpy as np
import pytest

from dmiwall import PreconditionError, exp_map_perturb, make_grid, to_spherical
from dmiwall.energy import (
    coercivity_check,
    energy,
    energy_gradient,
    effective_field,
    gamma_limit_energy_1d,
    grid_aligned_gauge,
    lagrange_multiplier,
    rho_components,
)
from dmiwall.fields import MagnetizationField, TangentField
from dmiwall.walls import WallParams, k_gamma, theta_star, wall_profile

from conftest import random_pole_avoiding_field


def constant_field(grid, vec):
    return MagnetizationField(grid, np.tile(np.asarray(vec, float), (grid.n_points, 1)))


class TestEnergy:
    def test_ground_state(self, coarse_grid):
        m = constant_field(coarse_grid, [1.0, 0.0, 0.0])
        assert energy(m, 0.3).total == 0.0

    @pytest.mark.parametrize("gamma,target", [(0.0, 2.0), (0.6, 1.6)])
    def test_wall_energy(self, static_grid, gamma, target):
        m = wall_profile(WallParams(gamma), static_grid)
        assert energy(m, gamma).total == pytest.approx(target, abs=1e-5)

    def test_density_consistency(self, coarse_grid):
        m = random_pole_avoiding_field(coarse_grid, 4)
        rep = energy(m, 0.3)
        assert rep.total == coarse_grid.trapezoid(rep.density)

    def test_gamma_out_of_range(self, coarse_grid):
        m = constant_field(coarse_grid, [1.0, 0.0, 0.0])
        with pytest.raises(PreconditionError, match="gamma out of range"):
            energy(m, 1.5)

    def test_spherical_density_identity(self, coarse_grid):
        # pointwise integrand equals (dx theta)^2 + sin^2 theta ((dx phi + g)^2 + 1 - g^2)
        gamma = 0.4
        m = random_pole_avoiding_field(coarse_grid, 9)
        rep = energy(m, gamma)
        sf = to_spherical(m)
        dx = coarse_grid.spacing
        dth = np.gradient(sf.theta, dx, edge_order=2)
        dph = np.gradient(sf.phi, dx, edge_order=2)
        dens_sph = 0.5 * (dth**2 + np.sin(sf.theta) ** 2 * ((dph + gamma) ** 2 + 1 - gamma**2))
        interior = slice(2, -2)
        assert np.abs(rep.density - dens_sph)[interior].max() <= 5 * dx**2


class TestEnergyGradient:
    def test_zero_at_pole(self, coarse_grid):
        m = constant_field(coarse_grid, [1.0, 0.0, 0.0])
        assert np.abs(energy_gradient(m, 0.3)).max() == 0.0

    @pytest.mark.parametrize("gamma", [0.0, 0.3, 0.6])
    def test_wall_is_eigenvector(self, static_grid, gamma):
        # deltaE(w*) = beta* w* with beta* = 2 (1-gamma^2) sin^2 theta*
        m = wall_profile(WallParams(gamma), static_grid)
        dE = energy_gradient(m, gamma)
        beta = 2 * (1 - gamma**2) / np.cosh(k_gamma(gamma) * static_grid.x) ** 2
        resid = np.abs(dE - beta[:, None] * m.values).max()
        assert resid <= 5 * static_grid.spacing**2

    def test_value_at_origin_gamma0(self):
        grid = make_grid(20.0, 4001)  # odd center point at x=0
        m = wall_profile(WallParams(0.0), grid)
        i = grid.n_points // 2
        dE = energy_gradient(m, 0.0)
        assert np.allclose(dE[i], [0.0, 2.0, 0.0], atol=1e-6)

    def test_el_residual(self, static_grid):
        m = wall_profile(WallParams(0.3), static_grid)
        resid = np.abs(np.cross(m.values, energy_gradient(m, 0.3))).max()
        assert resid <= 5 * static_grid.spacing**2

    def test_gradient_consistency(self, coarse_grid):
        # (E(exp(m, d v)) - E(m))/d -> int deltaE . v dx, first order in d
        gamma = 0.3
        m = random_pole_avoiding_field(coarse_grid, 12)
        rng = np.random.RandomState(13)
        raw = rng.randn(coarse_grid.n_points, 3)
        raw -= np.einsum("ij,ij->i", raw, m.values)[:, None] * m.values
        raw /= np.abs(np.linalg.norm(raw, axis=1)).max() * 10
        directional = coarse_grid.trapezoid(
            np.einsum("ij,ij->i", energy_gradient(m, gamma), raw)
        )
        e0 = energy(m, gamma).total
        errs = []
        for delta in (0.04, 0.02, 0.01):
            md = exp_map_perturb(m, TangentField(coarse_grid, delta * raw))
            errs.append(abs((energy(md, gamma).total - e0) / delta - directional))
        assert errs[0] / errs[1] >= 1.9
        assert errs[1] / errs[2] >= 1.9

    def test_gauge_invariance_and_equivariance(self, static_grid):
        gamma = 0.3
        m = wall_profile(WallParams(gamma), static_grid)
        shifted = grid_aligned_gauge(m, 3, 0.7)
        assert abs(energy(shifted, gamma).total - energy(m, gamma).total) <= 1e-10
        lhs = energy_gradient(shifted, gamma)
        rhs = grid_aligned_gauge(
            MagnetizationField(static_grid, _normalized(energy_gradient(m, gamma))), 0, 0
        )
        # compare via the raw gradient transported by the same gauge
        g = energy_gradient(m, gamma)
        transported = np.zeros_like(g)
        transported[3:] = g[:-3]
        c, s = np.cos(0.7), np.sin(0.7)
        rot = transported.copy()
        rot[:, 1] = c * transported[:, 1] - s * transported[:, 2]
        rot[:, 2] = s * transported[:, 1] + c * transported[:, 2]
        assert np.abs(lhs[5:] - rot[5:]).max() <= 1e-10


def _normalized(v):
    n = np.linalg.norm(v, axis=1, keepdims=True)
    return v / np.maximum(n, 1e-300)


class TestEffectiveField:
    def test_pure_applied(self, coarse_grid):
        m = constant_field(coarse_grid, [1.0, 0.0, 0.0])
        H = effective_field(m, 0.3, 0.1)
        assert np.allclose(H, [0.1, 0.0, 0.0])

    def test_h_zero_is_minus_gradient(self, coarse_grid):
        m = random_pole_avoiding_field(coarse_grid, 14)
        assert np.array_equal(effective_field(m, 0.2, 0.0), -energy_gradient(m, 0.2))

    def test_wall(self, static_grid):
        gamma = 0.5
        m = wall_profile(WallParams(gamma), static_grid)
        beta = 2 * (1 - gamma**2) / np.cosh(k_gamma(gamma) * static_grid.x) ** 2
        H = effective_field(m, gamma, 0.0)
        assert np.abs(H + beta[:, None] * m.values).max() <= 5 * static_grid.spacing**2


class TestLagrangeMultiplier:
    def test_pole(self, coarse_grid):
        m = constant_field(coarse_grid, [1.0, 0.0, 0.0])
        assert np.allclose(lagrange_multiplier(m, 0.3), -1.0)

    def test_equator(self, coarse_grid):
        m = constant_field(coarse_grid, [0.0, 1.0, 0.0])
        assert np.allclose(lagrange_multiplier(m, 0.3), 0.0)

    def test_two_discretizations_agree(self, coarse_grid):
        # lambda = m . deltaE(m) - 1 via the independent gradient path
        gamma = 0.35
        m = random_pole_avoiding_field(coarse_grid, 15)
        lam = lagrange_multiplier(m, gamma)
        alt = np.einsum("ij,ij->i", m.values, energy_gradient(m, gamma)) - 1.0
        assert np.abs(lam - alt).max() <= 5 * coarse_grid.spacing**2


class TestRhoComponents:
    @pytest.fixture(scope="class", params=[0.0, 0.3, 0.6])
    def setup(self, request):
        gamma = request.param
        L = 16.5 / k_gamma(gamma)
        grid = make_grid(L, int(round(2 * L / 0.02)) + 1)
        return gamma, grid, wall_profile(WallParams(gamma), grid)

    def test_wall_rho12_vanish(self, setup):
        gamma, grid, m = setup
        r = rho_components(m, gamma)
        assert np.abs(r.rho1).max() <= 5 * grid.spacing**2
        assert np.abs(r.rho2).max() <= 5 * grid.spacing**2

    def test_wall_rho0_is_beta(self, setup):
        gamma, grid, m = setup
        r = rho_components(m, gamma)
        beta = 2 * (1 - gamma**2) / np.cosh(k_gamma(gamma) * grid.x) ** 2
        assert np.abs(r.rho0 - beta).max() <= 5 * grid.spacing**2

    def test_spherical_crosscheck(self, coarse_grid):
        # rho1 equals dxx theta - sin cos ((dx phi + g)^2 + 1 - g^2) from coordinates
        gamma = 0.3
        m = random_pole_avoiding_field(coarse_grid, 16)
        r = rho_components(m, gamma)
        sf = to_spherical(m)
        dx = coarse_grid.spacing
        dth = np.gradient(sf.theta, dx, edge_order=2)
        ddth = (sf.theta[2:] - 2 * sf.theta[1:-1] + sf.theta[:-2]) / dx**2
        dph = np.gradient(sf.phi, dx, edge_order=2)
        formula = ddth - (np.sin(sf.theta) * np.cos(sf.theta))[1:-1] * (
            (dph[1:-1] + gamma) ** 2 + 1 - gamma**2
        )
        assert np.abs(r.rho1[1:-1] - formula)[2:-2].max() <= 50 * dx**2


class TestGammaLimit:
    def test_equals_twice_energy(self, coarse_grid):
        for seed in range(20):
            m = random_pole_avoiding_field(coarse_grid, 100 + seed)
            e2 = 2 * energy(m, 0.45).total
            assert gamma_limit_energy_1d(m, 0.45) == pytest.approx(e2, abs=1e-12 * max(1, abs(e2)))

    def test_pole_zero(self, coarse_grid):
        m = constant_field(coarse_grid, [1.0, 0.0, 0.0])
        assert gamma_limit_energy_1d(m, 0.3) == 0.0

    def test_wall_value(self, static_grid):
        m = wall_profile(WallParams(0.0), static_grid)
        assert gamma_limit_energy_1d(m, 0.0) == pytest.approx(4.0, abs=2e-5)


class TestCoercivity:
    def test_trivial(self, coarse_grid):
        m = constant_field(coarse_grid, [1.0, 0.0, 0.0])
        out = coercivity_check(m, 0.3)
        assert out["lhs"] == 0.0 and out["rhs"] == 0.0

    def test_bloch_wall_saturates(self, static_grid):
        out = coercivity_check(wall_profile(WallParams(0.0), static_grid), 0.0)
        assert out["lhs"] == pytest.approx(2.0, abs=1e-4)
        assert out["rhs"] == pytest.approx(2.0, abs=1e-4)

    @pytest.mark.parametrize("gamma", [0.0, 0.3, -0.55, 0.8])
    def test_random_fields(self, coarse_grid, gamma):
        for seed in range(25):
            m = random_pole_avoiding_field(coarse_grid, 300 + seed)
            out = coercivity_check(m, gamma)
            assert out["lhs"] >= out["rhs"] - 1e-10
