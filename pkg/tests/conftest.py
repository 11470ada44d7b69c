import copy

import numpy as np
import pytest

from latentcycles import Hyperparameters, generate_data, scenario_parameters
from latentcycles import gibbs
from latentcycles.sampler import initialize_state


def make_state(n=60, seed=5, scenario="I"):
    """Small Scenario-based state with one active confounder column."""
    rng = np.random.default_rng(seed)
    params = scenario_parameters(scenario)
    data, truth = generate_data(params, n, rng=rng)
    hyper = Hyperparameters.default(params.Q)
    state = initialize_state(data, hyper, rng)
    state.delta[:, 0] = 0
    state.delta[1, 0] = 1
    state.delta[2, 0] = 1
    state.pivot[0] = 1
    state.L[1, 0], state.L[2, 0] = 0.4, -0.3
    state.C[:, 0] = rng.standard_normal(n)
    state.B[0, 1] = 0.3
    state.tau = gibbs.draw_inverse_gamma(
        np.ones((n, params.Q)), 1.0 / 8.0, rng
    )
    state.recompute_residual(data)
    return state, data, hyper, truth


def clone_state(state):
    return copy.deepcopy(state)


def grid_moments(grid, log_density):
    """Mean and variance of a density known up to a constant on a grid."""
    lp = log_density - np.max(log_density)
    dens = np.exp(lp)
    z = np.trapezoid(dens, grid)
    dens /= z
    mean = np.trapezoid(dens * grid, grid)
    var = np.trapezoid(dens * grid ** 2, grid) - mean ** 2
    return mean, var, dens


def tv_distance(samples, grid, density, nbins=100):
    """Total variation between an empirical sample and a grid density.

    Uses equal-mass bins derived from the model CDF so the estimate is
    not dominated by per-bin counting noise.
    """
    cdf = np.concatenate([[0.0], np.cumsum(
        0.5 * (density[1:] + density[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    probs = np.linspace(0.0, 1.0, nbins + 1)
    edges = np.interp(probs, cdf, grid)
    edges[0], edges[-1] = -np.inf, np.inf
    hist, _ = np.histogram(samples, bins=edges)
    emp = hist / hist.sum()
    return 0.5 * np.sum(np.abs(emp - 1.0 / nbins))


@pytest.fixture
def small_state():
    return make_state()
