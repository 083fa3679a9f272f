"""Shared fixtures: canonical parameter points and cached Monte Carlo cells."""

import numpy as np
import pytest

from atvgarch.model import ModelSpec, ParamVector, TransitionParams
from atvgarch.montecarlo import dgp_theta, make_dgp, run_mc


@pytest.fixture
def theta_dgp2():
    return dgp_theta(18.0)


@pytest.fixture
def spec_atv():
    return ModelSpec(p=1, q=1, n_transitions=1, k_orders=(1,))


@pytest.fixture
def spec_garch():
    return ModelSpec(p=1, q=1)


@pytest.fixture
def theta_garch():
    return ParamVector(0.05, (0.1,), (0.8,))


def random_feasible_theta(rng, p=None, q=None, n_transitions=None, max_beta_sum=0.85):
    """Draw a parameter point satisfying every invariant, for oracle sweeps."""
    p = int(rng.integers(1, 3)) if p is None else p
    q = int(rng.integers(1, 3)) if q is None else q
    n_tr = int(rng.integers(0, 2)) if n_transitions is None else n_transitions
    beta_sum = rng.uniform(0.2, max_beta_sum)
    alpha_sum = rng.uniform(0.02, min(0.95 - beta_sum, 0.3))
    alphas = rng.dirichlet(np.ones(p)) * alpha_sum
    betas = rng.dirichlet(np.ones(q)) * beta_sum
    alpha0 = rng.uniform(0.01, 0.5)
    transitions = []
    locs = np.sort(rng.uniform(0.15, 0.85, size=n_tr))
    for l in range(n_tr):
        transitions.append(
            TransitionParams(
                gamma=rng.uniform(2.0, 60.0),
                locations=(float(locs[l]),),
                weight=rng.uniform(-0.5, 3.0) * alpha0,
            )
        )
    return ParamVector(alpha0, tuple(alphas), tuple(betas), tuple(transitions))


# Master seeds for the cached replication cells, one per (DGP, T).
_CELL_SEEDS = {
    ("DGP1", 3000): 101,
    ("DGP1", 6000): 102,
    ("DGP2", 3000): 201,
    ("DGP2", 6000): 202,
    ("DGP3", 3000): 301,
    ("DGP3", 6000): 302,
}


@pytest.fixture(scope="session")
def mc_cells():
    """Lazily computed, cached 500-replication studies (shared across tests)."""
    cache = {}

    def get(name, n_obs, reps=500, with_covariance=False):
        key = (name, n_obs, reps, with_covariance)
        if key not in cache:
            dgp = make_dgp(name, n_obs, reps, seed=_CELL_SEEDS[(name, n_obs)])
            cache[key] = run_mc(dgp, with_covariance=with_covariance)
        return cache[key]

    return get
