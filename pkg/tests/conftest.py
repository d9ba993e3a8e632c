import pytest

from blowup_lab.grids import make_grid
from blowup_lab.model import make_params


@pytest.fixture(scope="session")
def pure_p2():
    """Pure semilinear case at p = 2 (all perturbation amplitudes zero)."""
    return make_params(2.0)


@pytest.fixture(scope="session")
def perturbed_p2():
    """Gradient and lower-order perturbations switched on at unit size."""
    return make_params(2.0, alpha=1.0, alpha_bar=1.0, mu=1.0, mu_bar=1.0, mu0=1.0)


@pytest.fixture(scope="session")
def grid20():
    """Workhorse grid: [-20, 20] at dy = 0.05."""
    return make_grid(20.0, 0.05)
