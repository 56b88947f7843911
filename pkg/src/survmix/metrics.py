"""Censoring-aware evaluation: Kaplan-Meier, IPCW Brier score, integrated
Brier score, time-dependent concordance, RMST, RMST-based treatment
effects, and ranking AUC.

IPCW conventions (the contract for all weighted metrics here):
Brier weights are 1/G(T_i-) for events observed before the horizon and
1/G(t) for records still at risk at the horizon, where G is the
Kaplan-Meier estimate of the censoring distribution; concordance pairs are
weighted by G(T_i-)^-2. Samples whose censoring-survival weight falls
below 1e-6 are excluded with a warning.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-6

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class StepSurvivalCurve:
    """Right-continuous piecewise-constant survival curve, S(0-)=1."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if np.any(np.diff(self.times) < 0):
            raise ValueError("step times must be ascending")

    def __call__(self, t) -> np.ndarray:
        """S(t): value at the largest step time <= t (1 before the first)."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        out = np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 1.0)
        return out

    def left_limit(self, t) -> np.ndarray:
        """S(t-): value just before t."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="left") - 1
        return np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 1.0)


@dataclass
class MetricsReport:
    """Per-horizon discrimination/calibration plus optional effect summaries."""

    horizons: list
    concordance: dict = field(default_factory=dict)   # horizon -> C^td
    brier: dict = field(default_factory=dict)         # horizon -> BS(t)
    ibs: float | None = None
    extras: dict = field(default_factory=dict)        # RMST / ATE / CATE entries

    def to_dict(self) -> dict:
        return {
            "horizons": [float(t) for t in self.horizons],
            "concordance": {repr(float(k)): v for k, v in self.concordance.items()},
            "brier": {repr(float(k)): v for k, v in self.brier.items()},
            "ibs": self.ibs,
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            horizons=[float(t) for t in d["horizons"]],
            concordance={float(k): v for k, v in d["concordance"].items()},
            brier={float(k): v for k, v in d["brier"].items()},
            ibs=d.get("ibs"),
            extras=d.get("extras", {}),
        )


def kaplan_meier(times, deltas) -> StepSurvivalCurve:
    """Product-limit survival estimator; ties grouped."""
    t = np.asarray(times, dtype=float)
    d = np.asarray(deltas, dtype=int)
    if len(t) < 1:
        raise ValueError("need at least one observation")
    order = np.argsort(t, kind="stable")
    t, d = t[order], d[order]
    uniq = np.unique(t)
    at_risk = len(t)
    s = 1.0
    values = np.empty(len(uniq))
    for i, ut in enumerate(uniq):
        here = t == ut
        events = int(d[here].sum())
        if at_risk > 0 and events > 0:
            s *= 1.0 - events / at_risk
        values[i] = s
        at_risk -= int(here.sum())
    return StepSurvivalCurve(times=uniq, values=values)


def censoring_curve(times, deltas) -> StepSurvivalCurve:
    """Kaplan-Meier estimate of the censoring distribution (role-swapped KM)."""
    return kaplan_meier(times, 1 - np.asarray(deltas, dtype=int))


def brier_score(predictions, times, deltas, t: float) -> float:
    """IPCW-weighted squared error of P_hat(T > t | x) at one horizon.

    ``predictions`` holds the predicted survival probability at ``t`` for
    every sample.
    """
    p = np.asarray(predictions, dtype=float)
    T = np.asarray(times, dtype=float)
    d = np.asarray(deltas, dtype=int)
    G = censoring_curve(T, d)

    err = np.zeros(len(T))
    w = np.zeros(len(T))
    event_before = (T <= t) & (d == 1)
    at_risk = T > t
    w[event_before] = 1.0 / np.maximum(G.left_limit(T[event_before]), 1e-300)
    err[event_before] = p[event_before] ** 2
    w[at_risk] = 1.0 / max(float(G(t)), 1e-300)
    err[at_risk] = (1.0 - p[at_risk]) ** 2
    # censored before t contributes weight 0

    contributing = event_before | at_risk
    too_small = contributing & ((1.0 / np.maximum(w, 1e-300)) < WEIGHT_FLOOR)
    if np.any(too_small):
        logger.warning("excluding %d samples with censoring weight below %g",
                       int(too_small.sum()), WEIGHT_FLOOR)
    keep = ~too_small
    n_eff = int(keep.sum())
    if n_eff == 0:
        raise ValueError("no samples contribute to the Brier score at this horizon")
    return float(np.sum(w[keep] * err[keep]) / n_eff)


def integrated_brier(brier_by_horizon: dict) -> float:
    """Weighted sum of Brier scores: sum_t (t / t_max) * BS(t)."""
    if not brier_by_horizon:
        raise ValueError("need at least one horizon")
    horizons = sorted(brier_by_horizon)
    t_max = horizons[-1]
    return float(sum((t / t_max) * brier_by_horizon[t] for t in horizons))


def concordance_td(risks, times, deltas, t: float) -> float:
    """Time-dependent concordance at horizon t with IPCW pair weights.

    ``risks`` are predicted failure probabilities F_hat(t|x) (any strictly
    increasing transform gives the same answer). Comparable pairs: i had an
    observed event with T_i <= t and T_i < T_j. Ties in risk count 1/2.
    """
    r = np.asarray(risks, dtype=float)
    T = np.asarray(times, dtype=float)
    d = np.asarray(deltas, dtype=int)
    G = censoring_curve(T, d)
    gi = np.maximum(G.left_limit(T), 1e-300)

    num = 0.0
    den = 0.0
    anchors = np.flatnonzero((d == 1) & (T <= t))
    for i in anchors:
        if gi[i] < WEIGHT_FLOOR:
            logger.warning("excluding anchor sample %d with tiny censoring weight", i)
            continue
        w = 1.0 / (gi[i] ** 2)
        comp = T > T[i]
        if not np.any(comp):
            continue
        den += w * comp.sum()
        num += w * (np.sum(r[i] > r[comp]) + 0.5 * np.sum(r[i] == r[comp]))
    if den == 0:
        raise ValueError("no comparable pairs at this horizon")
    return float(num / den)


def rmst(curve, horizon: float, step: float | None = None) -> float:
    """Restricted mean survival time: trapezoidal integral of S on [0, t].

    ``curve`` is any callable t -> S(t). Default grid step is t/1000;
    error is O(step^2).
    """
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    if step is None:
        step = horizon / 1000.0
    grid = np.linspace(0.0, horizon, max(int(round(horizon / step)), 2) + 1)
    vals = np.asarray(curve(grid), dtype=float)
    return float(_trapezoid(vals, grid))


def cate_rmst(s1_curves, s0_curves, horizon: float, n_boot: int = 500,
              seed: int = 0, step: float | None = None):
    """Mean RMST difference (treated minus control) over a phenogroup.

    ``s1_curves``/``s0_curves`` are per-member callables. Returns
    (point estimate, percentile-bootstrap 95% half-width).
    """
    if len(s1_curves) == 0 or len(s1_curves) != len(s0_curves):
        raise ValueError("need one pair of curves per group member")
    diffs = np.array([rmst(s1, horizon, step) - rmst(s0, horizon, step)
                      for s1, s0 in zip(s1_curves, s0_curves)])
    point = float(diffs.mean())
    rng = np.random.default_rng(seed)
    n = len(diffs)
    boots = np.array([diffs[rng.integers(0, n, size=n)].mean() for _ in range(n_boot)])
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return point, float((hi - lo) / 2.0)


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC; ties count 1/2."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    pos = s[y == 1]
    neg = s[y == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("both classes must be present")
    # rank-based O(n log n) formulation
    order = np.argsort(np.concatenate([pos, neg]), kind="stable")
    ranks = np.empty(len(order))
    combined = np.concatenate([pos, neg])[order]
    # average ranks over ties
    i = 0
    while i < len(combined):
        j = i
        while j + 1 < len(combined) and combined[j + 1] == combined[i]:
            j += 1
        ranks[i:j + 1] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_of = np.empty(len(order))
    rank_of[order] = ranks
    r_pos = rank_of[:len(pos)].sum()
    u = r_pos - len(pos) * (len(pos) + 1) / 2.0
    return float(u / (len(pos) * len(neg)))
