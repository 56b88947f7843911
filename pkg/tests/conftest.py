"""Shared builders for small hand-constructed models and datasets."""

import numpy as np
import pytest

from survmix.baseline import BaselineSurvival
from survmix.data import StandardizationStats, SurvivalDataset
from survmix.model import CmheModel, FitConfig
from survmix.network import init_params


def exp_baselines(rates, tmax=8.0, n_knots=2001):
    """Planted exponential baselines S_k(t) = exp(-rate_k * t).

    A dense knot grid keeps the monotone interpolant (and its derivative)
    within ~1e-6 of the analytic curve on [0, tmax].
    """
    knots = np.linspace(0.0, tmax, n_knots)
    return BaselineSurvival(
        knots=[knots.copy() for _ in rates],
        values=[np.exp(-r * knots) for r in rates],
        lam=[None] * len(rates),
    )


def toy_model(d=2, K=2, M=2, layer_sizes=(), seed=0, rates=None, scale=0.0):
    """A small model with planted baselines and optionally random heads.

    ``scale`` > 0 perturbs all parameters with seeded normal noise so the
    heads are non-trivial; 0 leaves the zero-bias fan-in init.
    """
    config = FitConfig(K=K, M=M, layer_sizes=tuple(layer_sizes), seed=seed)
    params = init_params(d, layer_sizes, K, M, seed=seed)
    if scale > 0:
        rng = np.random.default_rng(seed + 1)
        for a in params.arrays().values():
            a += scale * rng.standard_normal(a.shape)
    if rates is None:
        rates = np.linspace(0.5, 1.5, K)
    return CmheModel(
        params=params,
        baselines=exp_baselines(rates),
        standardization=StandardizationStats.identity(d),
        config=config,
    )


def random_dataset(n=20, d=2, seed=0, p_event=0.7, tmax=3.0):
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.05, tmax, n)
    delta = (rng.random(n) < p_event).astype(int)
    if delta.sum() == 0:
        delta[0] = 1
    return SurvivalDataset(
        x=rng.standard_normal((n, d)),
        t=t, delta=delta, a=rng.integers(0, 2, n),
        feature_names=[f"x{i}" for i in range(d)],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
