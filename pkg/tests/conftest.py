"""Shared fixtures: the two reference market setups at production size.

Session-scoped so the expensive 100k-path simulations and kernel pipelines
run once and are shared between the module tests and the acceptance gate.
"""

from collections import namedtuple

import numpy as np
import pytest

from wassport.copulas import CopulaSpec
from wassport.estimate import (benchmark_quantile, build_coupled_sample,
                               xi_estimate)
from wassport.market import (GbmParams, SirCevParams, Strategy, simulate_gbm,
                             simulate_sir_cev)

N_PATHS = 100_000
GRID_M = 1000

GBM_TWO_ASSET = GbmParams(
    mu=np.array([0.05, 0.06]),
    sigma=np.array([0.1, 0.12]),
    rho=np.array([[1.0, 0.25], [0.25, 1.0]]),
    r=0.01,
    s0=np.array([1.0, 2.0]),
    T=5.0,
)
GBM_STRATEGY = Strategy(delta=np.array([0.25, 0.75]), x0=1.0)

SIRCEV_THREE_ASSET = SirCevParams(
    mu=np.array([0.05, 0.06]),
    sigma=np.array([0.2, 0.32]),
    beta=np.array([-0.2, -0.3]),
    rho=np.array([[1.0, 0.25, 0.2], [0.25, 1.0, 0.3], [0.2, 0.3, 1.0]]),
    r0=0.02,
    kappaP=1.0,
    thetaP=0.02,
    sigma_r=0.02,
    kappaQ=1.0,
    thetaQ=0.025,
    s0=np.array([1.0, 2.0]),
    T=5.0,
)
SIRCEV_STRATEGY = Strategy(delta=np.array([0.2, 0.6, 0.1]), x0=1.0)

COIN = CopulaSpec("coin", u_star=0.25)
GUMBEL = CopulaSpec("gumbel", theta=2.0)

Estimates = namedtuple("Estimates", "f coupled xi")


@pytest.fixture(scope="session")
def gbm_paths():
    return simulate_gbm(GBM_TWO_ASSET, GBM_STRATEGY, N_PATHS, seed=1)


@pytest.fixture(scope="session")
def sircev_paths():
    return simulate_sir_cev(SIRCEV_THREE_ASSET, SIRCEV_STRATEGY, N_PATHS,
                            seed=2)


def _estimates(paths, copula):
    coupled = build_coupled_sample(paths, copula)
    f = benchmark_quantile(paths, GRID_M)
    xi = xi_estimate(paths, coupled, GRID_M)
    return Estimates(f=f, coupled=coupled, xi=xi)


@pytest.fixture(scope="session")
def gbm_coin(gbm_paths):
    return _estimates(gbm_paths, COIN)


@pytest.fixture(scope="session")
def gbm_gumbel(gbm_paths):
    return _estimates(gbm_paths, GUMBEL)


@pytest.fixture(scope="session")
def sircev_coin(sircev_paths):
    return _estimates(sircev_paths, COIN)
