"""Per-cluster baseline survival curves.

Each cluster's Breslow step estimate is smoothed with a cubic smoothing
spline (squared-second-derivative penalty), anchored at S(0)=1, projected
to be non-increasing, and clamped to (EPS_SURV, 1]. Beyond the last knot
the curve extrapolates as a constant. The stored representation is a
monotone (PCHIP) interpolant on a dense grid, which also provides the
analytic derivative used for the event density.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator, make_smoothing_spline

logger = logging.getLogger(__name__)

EPS_SURV = 1e-8
DENSITY_FLOOR = 1e-12
GRID_SIZE = 400
# minimum number of (anchor + event) points before smoothing is attempted
MIN_SMOOTH_POINTS = 10


def select_smoothing_penalty(t: np.ndarray, s: np.ndarray) -> float:
    """Pick the spline penalty by 5-fold cross-validation on a log grid.

    Folds are deterministic (interleaved by index), so the choice is a pure
    function of the step estimate. The grid is scaled by range(t)^3 / n,
    the natural magnitude of the curvature penalty.
    """
    n = len(t)
    scale = (t[-1] - t[0]) ** 3 / n
    candidates = scale * np.logspace(-4, 4, 9)
    best_lam, best_err = candidates[0], np.inf
    for lam in candidates:
        err = 0.0
        for fold in range(5):
            hold = np.arange(n) % 5 == fold
            hold[0] = False  # always keep the anchor in the fit
            if hold.sum() == 0 or (~hold).sum() < 5:
                continue
            try:
                sp = make_smoothing_spline(t[~hold], s[~hold], lam=lam)
            except Exception:
                err = np.inf
                break
            err += float(np.sum((sp(t[hold]) - s[hold]) ** 2))
        if err < best_err:
            best_err, best_lam = err, lam
    return float(best_lam)


def _fit_curve(t: np.ndarray, s: np.ndarray, lam):
    """Smooth, anchor, monotone-project and re-interpolate one curve.

    Returns (pchip, knots, values, lam_used). ``lam`` None triggers
    penalty selection (small clusters fall back to plain monotone
    interpolation, lam_used stays None for them).
    """
    if len(t) < MIN_SMOOTH_POINTS:
        # too few points to smooth; the step values are already monotone
        knots, values = t, np.clip(s, EPS_SURV, 1.0)
        values[0] = 1.0
        return PchipInterpolator(knots, values, extrapolate=False), knots, values, None

    if lam is None:
        lam = select_smoothing_penalty(t, s)
    spline = make_smoothing_spline(t, s, lam=lam)
    knots = np.linspace(t[0], t[-1], GRID_SIZE)
    values = np.clip(spline(knots), EPS_SURV, 1.0)
    values[0] = 1.0
    values = np.minimum.accumulate(values)
    return PchipInterpolator(knots, values, extrapolate=False), knots, values, float(lam)


@dataclass
class BaselineSurvival:
    """Monotone spline baseline survival per cluster, S_k(0) = 1."""

    knots: list          # per cluster: ascending knot times, knots[k][0] == 0
    values: list         # per cluster: survival values at the knots
    lam: list            # per cluster: smoothing penalty used (None = interpolated)

    def __post_init__(self):
        self._splines = [PchipInterpolator(k, v, extrapolate=False)
                         for k, v in zip(self.knots, self.values)]
        self._derivs = [sp.derivative() for sp in self._splines]

    @property
    def K(self) -> int:
        return len(self.knots)

    def survival(self, k: int, t) -> np.ndarray:
        """S_k(t); constant extrapolation beyond the last knot."""
        t = np.asarray(t, dtype=float)
        tmax = self.knots[k][-1]
        out = self._splines[k](np.clip(t, 0.0, tmax))
        return np.clip(out, EPS_SURV, 1.0)

    def log_survival(self, k: int, t) -> np.ndarray:
        return np.log(self.survival(k, t))

    def density(self, k: int, t) -> np.ndarray:
        """Baseline event density -dS_k/dt, floored; zero past the support."""
        t = np.asarray(t, dtype=float)
        tmax = self.knots[k][-1]
        inside = t <= tmax
        d = np.where(inside, -self._derivs[k](np.clip(t, 0.0, tmax)), 0.0)
        return np.maximum(d, DENSITY_FLOOR)

    def copy(self) -> "BaselineSurvival":
        return BaselineSurvival(
            knots=[k.copy() for k in self.knots],
            values=[v.copy() for v in self.values],
            lam=list(self.lam),
        )


def baselines_from_steps(step_times: list, step_surv: list, lam_per_cluster=None,
                         previous: "BaselineSurvival | None" = None) -> BaselineSurvival:
    """Build a BaselineSurvival from per-cluster Breslow step estimates.

    ``step_times``/``step_surv`` exclude t=0; the (0, 1) anchor is added
    here. A cluster with no event times reuses the previous iteration's
    curve when available, else stays flat at 1.
    """
    K = len(step_times)
    if lam_per_cluster is None:
        lam_per_cluster = [None] * K
    knots, values, lams = [], [], []
    for k in range(K):
        st = np.asarray(step_times[k], dtype=float)
        ss = np.asarray(step_surv[k], dtype=float)
        if len(st) == 0:
            if previous is not None:
                logger.warning("cluster %d has no hard-assigned events; keeping previous baseline", k)
                knots.append(previous.knots[k].copy())
                values.append(previous.values[k].copy())
                lams.append(previous.lam[k])
            else:
                knots.append(np.array([0.0, 1.0]))
                values.append(np.array([1.0, 1.0]))
                lams.append(None)
            continue
        t = np.concatenate([[0.0], st])
        s = np.concatenate([[1.0], ss])
        _, kn, vals, lam_used = _fit_curve(t, s, lam_per_cluster[k])
        knots.append(kn)
        values.append(vals)
        lams.append(lam_used)
    return BaselineSurvival(knots=knots, values=values, lam=lams)
