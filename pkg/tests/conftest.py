import numpy as np
import pytest

from qqsd.model import SystemParams


@pytest.fixture
def small_params():
    """Cheap grid for unit tests."""
    return SystemParams(gamma=0.3, kappa=1.0, Gamma=1.0, dt=1e-3, t_max=0.5,
                        n_traj=4, seed=99, order=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density(rng, pure_rank=None):
    """Random unit-trace PSD 6x6 matrix (rank-limited when requested)."""
    k = pure_rank or 6
    a = rng.standard_normal((6, k)) + 1j * rng.standard_normal((6, k))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
