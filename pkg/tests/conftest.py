import numpy as np
import pytest

import mimosync as ms


@pytest.fixture(scope="session")
def link_cfg():
    """The reference 2x2 link: N=128, 26 taps, 5 nonzero per pair."""
    return ms.SystemConfig(n_subcarriers=128, n_tx=2, n_rx=2, max_taps=26,
                           sparsity=5, theta_max=5, cp_len=32)


@pytest.fixture(scope="session")
def link_pilots(link_cfg):
    return ms.generate_pilots(link_cfg, seed=101)


@pytest.fixture(scope="session")
def reduced_grids():
    """Search grids narrowed around (0.10, 1e-4, any theta)."""
    return ms.GridSpec(eps_min=0.05, eps_max=0.15, eps_step=0.01,
                       eta_min=-4e-4, eta_max=6e-4, eta_step=1e-4,
                       theta_min=0, theta_max=5)


def relerr(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b)
