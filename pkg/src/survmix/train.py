"""Stochastic-EM training loop.

Per minibatch: E-step (soft posteriors + sampled hard assignments), then an
Adam ascent step on the sampled M-step objective. Once per epoch the
per-cluster Breslow baselines are refreshed on the full training split and
the soft-marginalized log-likelihood of a held-out validation split drives
early stopping. Fully deterministic given the config seed.
"""

from __future__ import annotations

import logging

import numpy as np

from . import data as data_mod
from .data import StandardizationStats, SurvivalDataset
from .model import (CmheModel, FitConfig, Posteriors, breslow_update, e_step,
                    full_loglik, q_hat_grads)
from .network import OptimizerState, adam_step, init_params

logger = logging.getLogger(__name__)

# initial spread of the per-component treatment log-effects; see fit()
OMEGA_JITTER = 0.05


def _uniform_hard_posteriors(n: int, K: int, M: int, rng: np.random.Generator) -> Posteriors:
    return Posteriors(
        gamma=np.full((n, K), 1.0 / K),
        zeta=np.full((n, M), 1.0 / M),
        psi=rng.integers(0, K, size=n),
        xi=rng.integers(0, M, size=n),
    )


def fit(dataset: SurvivalDataset, config: FitConfig,
        standardization: StandardizationStats | None = None) -> CmheModel:
    """Train the mixture model; returns the best-validation checkpoint.

    ``standardization`` is stored on the model for prediction-time input
    scaling; pass the stats used to preprocess ``dataset`` (identity when
    the data is already in model space).
    """
    config.validate()
    if standardization is None:
        standardization = StandardizationStats.identity(dataset.d, dataset.feature_names)

    ss = np.random.SeedSequence(config.seed)
    seed_init, seed_split, seed_batch, seed_hard = ss.spawn(4)
    rng_batch = np.random.default_rng(seed_batch)
    rng_hard = np.random.default_rng(seed_hard)

    train, val = data_mod.split(dataset, 1.0 - config.val_fraction,
                                seed=int(seed_split.generate_state(1)[0] % (2**31)))

    params = init_params(dataset.d, config.layer_sizes, config.K, config.M,
                         seed=int(seed_init.generate_state(1)[0] % (2**31)))
    if config.M > 1:
        # break the effect-component symmetry: with all omega equal the
        # phi-posterior collapses onto the gate and the g head gets no
        # gradient, so EM can stall at the symmetric saddle
        params.omega += OMEGA_JITTER * np.linspace(-1.0, 1.0, config.M)
    # train in the dataset's own coordinates; the caller-supplied stats are
    # attached at the end so they only rescale raw inputs at prediction time
    identity = StandardizationStats.identity(dataset.d, dataset.feature_names)
    model = CmheModel(params=params, baselines=None, standardization=identity,
                      config=config)

    # initial baselines from uniformly random hard assignments; the spline
    # penalty chosen here is frozen for the rest of the run
    post0 = _uniform_hard_posteriors(train.n, config.K, config.M, rng_hard)
    lam_init = [config.spline_penalty] * config.K
    model.baselines = breslow_update(model, train, post0, lam_per_cluster=lam_init)
    frozen_lam = [lam if lam is not None else config.spline_penalty
                  for lam in model.baselines.lam]

    opt = OptimizerState(lr=config.learning_rate)

    best_ll = full_loglik(model, val)
    best_params = model.params.copy()
    best_baselines = model.baselines.copy()
    model.history.append({"epoch": 0, "val_loglik": best_ll})
    stall = 0

    n_train = train.n
    for epoch in range(1, config.max_epochs + 1):
        order = rng_batch.permutation(n_train)
        for start in range(0, n_train, config.batch_size):
            rows = order[start:start + config.batch_size]
            if len(rows) < 2:
                continue
            batch = train.subset(rows)
            post = e_step(model, batch, rng_hard)
            value, grads = q_hat_grads(model, batch, post)
            if not np.isfinite(value):
                raise FloatingPointError(f"objective diverged at epoch {epoch}")
            # Adam minimizes; ascend on the mean objective
            neg = {name: -g / len(rows) for name, g in grads.items()}
            model.params = adam_step(model.params, neg, opt)

        post_full = e_step(model, train, rng_hard)
        model.baselines = breslow_update(model, train, post_full,
                                         previous=model.baselines,
                                         lam_per_cluster=frozen_lam)
        # freeze the penalty the first time a cluster's selection ran
        frozen_lam = [fl if fl is not None else bl
                      for fl, bl in zip(frozen_lam, model.baselines.lam)]
        val_ll = full_loglik(model, val)
        if not np.isfinite(val_ll):
            raise FloatingPointError(f"validation likelihood diverged at epoch {epoch}")
        model.history.append({"epoch": epoch, "val_loglik": val_ll})
        logger.debug("epoch %d: val loglik %.4f", epoch, val_ll)
        if val_ll > best_ll:
            best_ll = val_ll
            best_params = model.params.copy()
            best_baselines = model.baselines.copy()
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                break

    model.params = best_params
    model.baselines = best_baselines
    model.standardization = standardization
    return model
