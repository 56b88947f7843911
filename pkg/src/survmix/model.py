"""Core mixture model: likelihood terms, E-step posteriors, cluster-wise
partial likelihood, the sampled M-step objective, the Breslow baseline
update, and counterfactual survival prediction.

Latent structure: Z in {1..K} indexes baseline-survival clusters (gated by
the f head), phi in {1..M} indexes treatment-effect phenogroups (gated by
the g head). Conditional on (Z=k, phi=m, A=a) the hazard is the cluster
baseline times exp(h_k(x)) * exp(omega_m)^a.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baseline import BaselineSurvival, baselines_from_steps
from .data import StandardizationStats, SurvivalDataset
from .network import (CmheParams, ForwardOutput, backward, forward,
                      log_softmax, logsumexp, softmax)


@dataclass
class FitConfig:
    """Training configuration for the stochastic-EM loop."""

    K: int = 3
    M: int = 2
    layer_sizes: tuple = (16,)
    batch_size: int = 128
    learning_rate: float = 5e-3
    max_epochs: int = 300
    patience: int = 30
    spline_penalty: float | None = None  # None: selected on first refresh, then frozen
    val_fraction: float = 0.25
    seed: int = 0

    def validate(self):
        if self.K < 1 or self.M < 1:
            raise ValueError("K and M must be >= 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")


@dataclass
class Posteriors:
    """Per-sample soft (gamma, zeta) and sampled hard (psi, xi) assignments.

    Hard assignments are 0-based indices.
    """

    gamma: np.ndarray  # (n, K)
    zeta: np.ndarray   # (n, M)
    psi: np.ndarray    # (n,)
    xi: np.ndarray     # (n,)


@dataclass
class CmheModel:
    """A fitted model: network parameters, baseline splines, input scaling."""

    params: CmheParams
    baselines: BaselineSurvival
    standardization: StandardizationStats
    config: FitConfig
    history: list = field(default_factory=list, repr=False)

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def M(self) -> int:
        return self.config.M

    def transform(self, x: np.ndarray) -> np.ndarray:
        return self.standardization.transform(np.atleast_2d(np.asarray(x, dtype=float)))


def _check_indices(model: CmheModel, k: int, m: int):
    if not 0 <= k < model.K:
        raise IndexError(f"cluster index {k} out of range [0, {model.K})")
    if not 0 <= m < model.M:
        raise IndexError(f"phenogroup index {m} out of range [0, {model.M})")


def conditional_survival(model: CmheModel, x, a: int, k: int, m: int, t):
    """S(t | x, a, Z=k, phi=m) = S_k(t) ** (exp(h_k(x)) * exp(omega_m)^a)."""
    _check_indices(model, k, m)
    out = forward(model.params, model.transform(x))
    log_mult = out.h_values[0, k] + a * model.params.omega[m]
    logS = np.exp(log_mult) * model.baselines.log_survival(k, t)
    return np.exp(logS)


def _loglik_terms(model: CmheModel, fwd: ForwardOutput, t, delta, a) -> np.ndarray:
    """log P(t | Z=k, phi=m, x, a) for every sample and (k, m): (n, K, M).

    Events use the spline density, censored records the survival function.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    delta = np.atleast_1d(np.asarray(delta, dtype=int))
    a = np.atleast_1d(np.asarray(a, dtype=int))
    n, K, M = len(t), model.K, model.M

    logS0 = np.empty((n, K))
    logf0 = np.empty((n, K))
    for k in range(K):
        logS0[:, k] = model.baselines.log_survival(k, t)
        logf0[:, k] = np.log(model.baselines.density(k, t))

    # log hazard multiplier per (i, k, m)
    lmult = fwd.h_values[:, :, None] + a[:, None, None] * model.params.omega[None, None, :]
    mult = np.exp(lmult)
    logS = mult * logS0[:, :, None]
    logpdf = lmult + (mult - 1.0) * logS0[:, :, None] + logf0[:, :, None]
    return np.where(delta[:, None, None] == 1, logpdf, logS)


def conditional_hazard_loglik(model: CmheModel, record, k: int, m: int) -> float:
    """Log-likelihood contribution of one record under fixed (Z=k, phi=m)."""
    _check_indices(model, k, m)
    fwd = forward(model.params, model.transform(record.x))
    terms = _loglik_terms(model, fwd, [record.t], [record.delta], [record.a])
    return float(terms[0, k, m])


def e_step(model: CmheModel, batch: SurvivalDataset, rng: np.random.Generator) -> Posteriors:
    """Joint posterior over (Z, phi) per sample, marginals, and hard draws."""
    fwd = forward(model.params, model.transform(batch.x))
    log_joint = (log_softmax(fwd.f_logits)[:, :, None]
                 + log_softmax(fwd.g_logits)[:, None, :]
                 + _loglik_terms(model, fwd, batch.t, batch.delta, batch.a))
    norm = logsumexp(log_joint.reshape(batch.n, -1), axis=1)
    bad = ~np.isfinite(norm)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise FloatingPointError(f"degenerate posterior for sample {i}: all joint terms are -inf")
    post = np.exp(log_joint - norm[:, None, None])
    gamma = post.sum(axis=2)
    zeta = post.sum(axis=1)
    psi = _sample_categorical(gamma, rng)
    xi = _sample_categorical(zeta, rng)
    return Posteriors(gamma=gamma, zeta=zeta, psi=psi, xi=xi)


def _sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per row of a row-stochastic matrix."""
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0 + 1e-12  # guard against rounding at the top end
    u = rng.random(probs.shape[0])
    return (u[:, None] >= cum).sum(axis=1)


def _pl_terms(h_values, omega, t, delta, a, psi, xi, want_grads: bool):
    """Cluster-wise Cox partial log-likelihoods under hard assignments.

    Risk sets are restricted to samples hard-assigned to the same cluster.
    Returns (value, dh, domega); gradients are None unless requested.
    """
    n, K = h_values.shape
    M = len(omega)
    value = 0.0
    dh = np.zeros_like(h_values) if want_grads else None
    domega = np.zeros(M) if want_grads else None
    for k in range(K):
        members = np.flatnonzero(psi == k)
        if len(members) == 0:
            continue
        eta = h_values[members, k] + a[members] * omega[xi[members]]
        tm = t[members]
        d_eta = np.zeros(len(members))
        for pos in np.flatnonzero(delta[members] == 1):
            risk = tm >= tm[pos]
            emax = eta[risk].max()
            w = np.exp(eta[risk] - emax)
            lse = emax + np.log(w.sum())
            value += eta[pos] - lse
            if want_grads:
                d_eta[pos] += 1.0
                d = np.zeros(len(members))
                d[risk] = w / w.sum()
                d_eta -= d
        if want_grads:
            dh[members, k] += d_eta
            np.add.at(domega, xi[members], d_eta * a[members])
    return value, dh, domega


def partial_loglik_k(model: CmheModel, batch: SurvivalDataset, post: Posteriors, k: int) -> float:
    """ln PL_k for one cluster under the drawn hard assignments."""
    if not 0 <= k < model.K:
        raise IndexError(f"cluster index {k} out of range")
    fwd = forward(model.params, model.transform(batch.x))
    # mask out every other cluster so _pl_terms sums PL_k alone
    psi_only_k = np.where(post.psi == k, post.psi, -1)
    value, _, _ = _pl_terms(fwd.h_values, model.params.omega, batch.t, batch.delta,
                            batch.a, psi_only_k, post.xi, want_grads=False)
    return float(value)


def q_hat(model: CmheModel, batch: SurvivalDataset, post: Posteriors,
          fwd: ForwardOutput | None = None, want_grads: bool = False):
    """Sampled M-step objective: sum_k ln PL_k plus soft gate cross-entropies.

    With ``want_grads`` also returns upstream gradients w.r.t. the head
    outputs (suitable for :func:`survmix.network.backward`).
    """
    if fwd is None:
        fwd = forward(model.params, model.transform(batch.x))
    pl, dh, domega = _pl_terms(fwd.h_values, model.params.omega, batch.t, batch.delta,
                               batch.a, post.psi, post.xi, want_grads=want_grads)
    log_pf = log_softmax(fwd.f_logits)
    log_pg = log_softmax(fwd.g_logits)
    value = pl + float(np.sum(post.gamma * log_pf)) + float(np.sum(post.zeta * log_pg))
    if not want_grads:
        return value
    upstream = {
        "f_logits": post.gamma - softmax(fwd.f_logits),
        "g_logits": post.zeta - softmax(fwd.g_logits),
        "h_values": dh,
        "omega": domega,
    }
    return value, upstream


def q_hat_grads(model: CmheModel, batch: SurvivalDataset, post: Posteriors):
    """Value of the sampled objective and its gradient per parameter block."""
    fwd = forward(model.params, model.transform(batch.x))
    value, upstream = q_hat(model, batch, post, fwd=fwd, want_grads=True)
    return value, backward(model.params, fwd, upstream)


def breslow_update(model: CmheModel, dataset: SurvivalDataset, post: Posteriors,
                   previous: BaselineSurvival | None = None,
                   lam_per_cluster=None) -> BaselineSurvival:
    """Refresh per-cluster baseline survival via Breslow's estimator.

    Cumulative-hazard increments are placed at event times of hard-assigned
    cluster members; risk sets are cluster-local; tied events share a risk
    set with one increment each. The step estimate is then smoothed into a
    monotone spline.
    """
    fwd = forward(model.params, model.transform(dataset.x))
    step_times, step_surv = [], []
    for k in range(model.K):
        members = np.flatnonzero(post.psi == k)
        ev = members[dataset.delta[members] == 1]
        if len(ev) == 0:
            step_times.append(np.array([]))
            step_surv.append(np.array([]))
            continue
        eta = fwd.h_values[members, k] + dataset.a[members] * model.params.omega[post.xi[members]]
        tm = dataset.t[members]
        risk_scores = np.exp(eta)
        times = np.unique(dataset.t[ev])
        cumhaz = np.empty(len(times))
        running = 0.0
        for j, tt in enumerate(times):
            denom = risk_scores[tm >= tt].sum()
            d = int(np.sum(dataset.t[ev] == tt))
            running += d / denom
            cumhaz[j] = running
        step_times.append(times)
        step_surv.append(np.exp(-cumhaz))
    return baselines_from_steps(step_times, step_surv,
                                lam_per_cluster=lam_per_cluster, previous=previous)


def full_loglik(model: CmheModel, dataset: SurvivalDataset) -> float:
    """Soft-marginalized log-likelihood over (Z, phi); used for validation."""
    fwd = forward(model.params, model.transform(dataset.x))
    log_joint = (log_softmax(fwd.f_logits)[:, :, None]
                 + log_softmax(fwd.g_logits)[:, None, :]
                 + _loglik_terms(model, fwd, dataset.t, dataset.delta, dataset.a))
    per_sample = logsumexp(log_joint.reshape(dataset.n, -1), axis=1)
    bad = ~np.isfinite(per_sample)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise FloatingPointError(f"non-finite likelihood at sample {i}")
    return float(per_sample.sum())


def predict_survival(model: CmheModel, x, a: int, times) -> np.ndarray:
    """Counterfactual survival curve(s) under do(A)=a.

    Marginalizes the conditional survival over both latent gates. ``x`` may
    be a single vector or a (n, d) matrix; returns (len(times),) or
    (n, len(times)).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be ascending and >= 0")
    single = np.asarray(x).ndim == 1
    X = model.transform(x)
    out = forward(model.params, X)
    pf = softmax(out.f_logits)            # (n, K)
    pg = softmax(out.g_logits)            # (n, M)
    curves = np.zeros((X.shape[0], len(times)))
    for k in range(model.K):
        logS0 = model.baselines.log_survival(k, times)  # (T,)
        for m in range(model.M):
            lmult = out.h_values[:, k] + a * model.params.omega[m]
            Skm = np.exp(np.exp(lmult)[:, None] * logS0[None, :])
            curves += (pf[:, k] * pg[:, m])[:, None] * Skm
    curves = np.clip(curves, 1e-300, 1.0)
    return curves[0] if single else curves
