import numpy as np
import pytest

from dmiwall import make_grid
from dmiwall.fields import MagnetizationField, project_to_sphere


@pytest.fixture(scope="session")
def static_grid():
    # desk scale for static quadrature: L=20, dx=0.01
    return make_grid(20.0, 4001)


@pytest.fixture(scope="session")
def coarse_grid():
    return make_grid(20.0, 2001)


def random_pole_avoiding_field(grid, seed, bump_scale=0.3):
    """theta = pi/2 + smooth bump, phi = random trigonometric polynomial.

    Guarantees pole avoidance with a controlled H1 size; used by the energy
    coercivity and gamma-limit property tests.
    """
    rng = np.random.RandomState(seed)
    x, L = grid.x, grid.half_length
    theta = np.pi / 2 + bump_scale * np.exp(-(x - rng.uniform(-3, 3)) ** 2 / rng.uniform(2, 6))
    phi = sum(
        rng.uniform(-0.5, 0.5) * np.cos(j * np.pi * x / L)
        + rng.uniform(-0.5, 0.5) * np.sin(j * np.pi * x / L)
        for j in range(1, 4)
    )
    st = np.sin(theta)
    vals = np.stack([np.cos(theta), st * np.cos(phi), st * np.sin(phi)], axis=1)
    return project_to_sphere(grid, vals)
