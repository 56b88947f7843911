"""Independent reference implementations used as test oracles.

Everything here is written against the textbook definitions, deliberately
not sharing code with the package: plain Cox partial likelihood (optimized
with scipy), the Breslow / Nelson-Aalen cumulative hazard, and brute-force
O(n^2) versions of the censoring-aware metrics.
"""

import numpy as np
from scipy.optimize import minimize


def cox_neg_partial_loglik(beta, x, t, delta, offset=None):
    """Negative Cox partial log-likelihood, Breslow tie handling."""
    eta = x @ beta
    if offset is not None:
        eta = eta + offset
    val = 0.0
    for i in np.flatnonzero(delta == 1):
        risk = t >= t[i]
        val += eta[i] - np.log(np.sum(np.exp(eta[risk])))
    return -val


def cox_fit(x, t, delta, offset=None):
    """Maximum partial-likelihood estimate of the Cox coefficients."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    delta = np.asarray(delta, dtype=int)
    res = minimize(cox_neg_partial_loglik, np.zeros(x.shape[1]),
                   args=(x, t, delta, offset), method="BFGS",
                   options={"maxiter": 500, "gtol": 1e-9})
    return res.x


def partial_loglik(eta, t, delta):
    """Cox partial log-likelihood at fixed linear predictors."""
    eta = np.asarray(eta, dtype=float)
    val = 0.0
    for i in np.flatnonzero(np.asarray(delta) == 1):
        risk = np.asarray(t) >= t[i]
        val += eta[i] - np.log(np.sum(np.exp(eta[risk])))
    return val


def breslow_cumhaz(eta, t, delta):
    """Breslow cumulative baseline hazard at each unique event time.

    Tied events share the risk set and each contributes one increment.
    Returns (event_times, cumulative_hazard).
    """
    eta = np.asarray(eta, dtype=float)
    t = np.asarray(t, dtype=float)
    delta = np.asarray(delta, dtype=int)
    times = np.unique(t[delta == 1])
    cum = np.empty(len(times))
    running = 0.0
    for j, tt in enumerate(times):
        denom = np.sum(np.exp(eta[t >= tt]))
        d = np.sum((t == tt) & (delta == 1))
        running += d / denom
        cum[j] = running
    return times, cum


def nelson_aalen(t, delta):
    """Zero-covariate special case of the Breslow estimator."""
    return breslow_cumhaz(np.zeros(len(t)), t, delta)


def km_survival(times, deltas, at):
    """Product-limit estimate evaluated at one time point."""
    times = np.asarray(times, dtype=float)
    deltas = np.asarray(deltas, dtype=int)
    s = 1.0
    for ut in np.unique(times[(deltas == 1) & (times <= at)]):
        d = np.sum((times == ut) & (deltas == 1))
        n_risk = np.sum(times >= ut)
        s *= 1.0 - d / n_risk
    return s


def censor_km(times, deltas, at):
    return km_survival(times, 1 - np.asarray(deltas, dtype=int), at)


def censor_km_left(times, deltas, at):
    """Left limit G(t-) of the censoring Kaplan-Meier curve."""
    times = np.asarray(times, dtype=float)
    rev = 1 - np.asarray(deltas, dtype=int)
    s = 1.0
    for ut in np.unique(times[(rev == 1) & (times < at)]):
        d = np.sum((times == ut) & (rev == 1))
        n_risk = np.sum(times >= ut)
        s *= 1.0 - d / n_risk
    return s


def brier_brute(predictions, times, deltas, horizon):
    """Direct-sum IPCW Brier score at one horizon."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(times, dtype=float)
    d = np.asarray(deltas, dtype=int)
    total = 0.0
    for i in range(len(t)):
        if t[i] <= horizon and d[i] == 1:
            total += p[i] ** 2 / censor_km_left(t, d, t[i])
        elif t[i] > horizon:
            total += (1.0 - p[i]) ** 2 / censor_km(t, d, horizon)
        # censored before the horizon: weight zero but still in the count
    return total / len(t)


def ctd_brute(risks, times, deltas, horizon):
    """O(n^2) time-dependent concordance with IPCW pair weights."""
    r = np.asarray(risks, dtype=float)
    t = np.asarray(times, dtype=float)
    d = np.asarray(deltas, dtype=int)
    num = 0.0
    den = 0.0
    for i in range(len(t)):
        if d[i] != 1 or t[i] > horizon:
            continue
        w = censor_km_left(t, d, t[i]) ** -2
        for j in range(len(t)):
            if t[j] <= t[i]:
                continue
            den += w
            if r[i] > r[j]:
                num += w
            elif r[i] == r[j]:
                num += 0.5 * w
    return num / den


def auc_brute(scores, labels):
    """O(n^2) Mann-Whitney statistic with half-credit for ties."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    num = 0.0
    den = 0
    for i in np.flatnonzero(y == 1):
        for j in np.flatnonzero(y == 0):
            den += 1
            if s[i] > s[j]:
                num += 1.0
            elif s[i] == s[j]:
                num += 0.5
    return num / den
