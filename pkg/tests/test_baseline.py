import numpy as np

from survmix.baseline import (EPS_SURV, BaselineSurvival, baselines_from_steps,
                              select_smoothing_penalty)


def _noisy_decay(n=40, seed=0):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0.01, 4.0, n))
    t = np.concatenate([[0.0], t])
    s = np.exp(-0.8 * t) + 0.01 * rng.standard_normal(len(t))
    s[0] = 1.0
    return t, s


def test_anchor_and_monotone_projection():
    t, s = _noisy_decay()
    b = baselines_from_steps([t[1:]], [s[1:]])
    assert b.survival(0, 0.0) == 1.0
    grid = np.linspace(0.0, t[-1], 500)
    vals = b.survival(0, grid)
    assert np.all(np.diff(vals) <= 1e-12)
    assert np.all(vals > 0.0) and np.all(vals <= 1.0)


def test_bounds_clamped():
    t = np.linspace(0.1, 5.0, 30)
    s = np.exp(-5.0 * t)  # dives far below the floor region
    b = baselines_from_steps([t], [s])
    assert np.all(b.survival(0, np.linspace(0, 5, 100)) >= EPS_SURV)


def test_constant_extrapolation():
    t, s = _noisy_decay(seed=1)
    b = baselines_from_steps([t[1:]], [s[1:]])
    end = b.survival(0, t[-1])
    assert np.allclose(b.survival(0, [t[-1] + 1, t[-1] + 100]), end)
    assert b.density(0, t[-1] + 1.0) == 1e-12  # floor past the support


def test_eventless_cluster_flat_one():
    b = baselines_from_steps([np.array([])], [np.array([])])
    assert np.allclose(b.survival(0, [0.0, 0.5, 3.0]), 1.0)


def test_eventless_cluster_reuses_previous():
    t, s = _noisy_decay(seed=2)
    prev = baselines_from_steps([t[1:]], [s[1:]])
    b = baselines_from_steps([np.array([])], [np.array([])], previous=prev)
    grid = np.linspace(0, 4, 50)
    assert np.array_equal(b.survival(0, grid), prev.survival(0, grid))


def test_small_cluster_interpolates_exactly():
    # below the smoothing threshold the step values become the knots
    t = np.array([1.0, 2.0, 3.0])
    s = np.array([0.8, 0.5, 0.3])
    b = baselines_from_steps([t], [s])
    assert b.lam[0] is None
    assert np.allclose(b.survival(0, t), s, atol=1e-12)
    assert b.survival(0, 0.0) == 1.0


def test_density_matches_analytic_derivative():
    knots = np.linspace(0.0, 6.0, 2001)
    b = BaselineSurvival(knots=[knots], values=[np.exp(-knots)], lam=[None])
    grid = np.linspace(0.1, 5.0, 77)
    assert np.max(np.abs(b.density(0, grid) - np.exp(-grid))) < 1e-5


def test_penalty_selection_deterministic():
    t, s = _noisy_decay(seed=3)
    lam1 = select_smoothing_penalty(t, s)
    lam2 = select_smoothing_penalty(t, s)
    assert lam1 == lam2 and lam1 > 0


def test_frozen_penalty_respected():
    t, s = _noisy_decay(seed=4)
    b1 = baselines_from_steps([t[1:]], [s[1:]], lam_per_cluster=[0.01])
    assert b1.lam[0] == 0.01
