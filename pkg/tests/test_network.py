import numpy as np
import pytest

from survmix.network import (CmheParams, OptimizerState, adam_step, backward,
                             forward, init_params, log_softmax, logsumexp,
                             softmax)


def test_param_count_closed_form():
    d, K, M = 4, 3, 2
    hidden = (50, 50)
    p = init_params(d, hidden, K, M)
    expected = (d * 50 + 50) + (50 * 50 + 50) \
        + (50 * K + K) + (50 * M + M) + (50 * K + K) + M
    assert p.to_vector().size == expected


def test_init_deterministic_and_omega_zero():
    a = init_params(3, (10,), 2, 2, seed=42)
    b = init_params(3, (10,), 2, 2, seed=42)
    assert np.array_equal(a.to_vector(), b.to_vector())
    assert np.array_equal(a.omega, np.zeros(2))
    assert np.array_equal(a.f_b, np.zeros(2))


def test_zero_depth_zero_weights_uniform_gates():
    p = init_params(3, (), 4, 3, seed=0)
    for name, a in p.arrays().items():
        a[...] = 0.0
    out = forward(p, np.random.default_rng(0).standard_normal((5, 3)))
    assert np.array_equal(out.f_logits, np.zeros((5, 4)))
    assert np.allclose(softmax(out.f_logits), 0.25)
    assert np.allclose(softmax(out.g_logits), 1.0 / 3)


def test_forward_pure():
    p = init_params(3, (7,), 2, 2, seed=1)
    x = np.random.default_rng(1).standard_normal((4, 3))
    a = forward(p, x)
    b = forward(p, x)
    assert np.array_equal(a.f_logits, b.f_logits)
    assert np.array_equal(a.h_values, b.h_values)


def test_forward_manual_matrix_oracle():
    # d=2, one hidden layer of 2, K=2, M=1; every weight written out by hand
    p = init_params(2, (2,), 2, 1, seed=0)
    p.encoder[0][0][...] = [[0.5, -1.0], [0.25, 0.75]]
    p.encoder[0][1][...] = [0.1, -0.2]
    p.f_W[...] = [[1.0, 0.0], [0.0, 2.0]]
    p.f_b[...] = [0.5, -0.5]
    p.g_W[...] = [[1.5], [-0.5]]
    p.g_b[...] = [0.25]
    p.h_W[...] = [[-1.0, 0.5], [1.0, 1.0]]
    p.h_b[...] = [0.0, 0.1]
    x = np.array([0.3, -0.4])
    h1 = np.tanh(0.3 * 0.5 + (-0.4) * 0.25 + 0.1)
    h2 = np.tanh(0.3 * (-1.0) + (-0.4) * 0.75 - 0.2)
    out = forward(p, x)
    assert abs(out.f_logits[0, 0] - (h1 * 1.0 + 0.5)) < 1e-12
    assert abs(out.f_logits[0, 1] - (h2 * 2.0 - 0.5)) < 1e-12
    assert abs(out.g_logits[0, 0] - (h1 * 1.5 + h2 * (-0.5) + 0.25)) < 1e-12
    assert abs(out.h_values[0, 0] - (h1 * (-1.0) + h2 * 1.0)) < 1e-12
    assert abs(out.h_values[0, 1] - (h1 * 0.5 + h2 * 1.0 + 0.1)) < 1e-12


def test_backward_zero_upstream():
    p = init_params(3, (5,), 2, 2, seed=2)
    x = np.random.default_rng(2).standard_normal((6, 3))
    out = forward(p, x)
    grads = backward(p, out, {})
    for name, g in grads.items():
        assert np.all(g == 0.0), name


def _loss_and_upstream(p, x, cf, cg, ch):
    """Linear probe loss L = sum(cf*f) + sum(cg*g) + sum(ch*h)."""
    out = forward(p, x)
    value = float(np.sum(cf * out.f_logits) + np.sum(cg * out.g_logits)
                  + np.sum(ch * out.h_values))
    return value, out


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(3)
    p = init_params(3, (4,), 2, 2, seed=3)
    for a in p.arrays().values():
        a += 0.3 * rng.standard_normal(a.shape)
    x = rng.standard_normal((10, 3))
    cf = rng.standard_normal((10, 2))
    cg = rng.standard_normal((10, 2))
    ch = rng.standard_normal((10, 2))

    _, out = _loss_and_upstream(p, x, cf, cg, ch)
    grads = backward(p, out, {"f_logits": cf, "g_logits": cg, "h_values": ch})
    vec = p.to_vector()
    flat = np.concatenate([grads[name].ravel() for name in p.arrays()])
    eps = 1e-5
    for i in range(vec.size):
        vp, vm = vec.copy(), vec.copy()
        vp[i] += eps
        vm[i] -= eps
        lp, _ = _loss_and_upstream(p.from_vector(vp), x, cf, cg, ch)
        lm, _ = _loss_and_upstream(p.from_vector(vm), x, cf, cg, ch)
        fd = (lp - lm) / (2 * eps)
        denom = max(abs(fd), abs(flat[i]), 1e-8)
        assert abs(fd - flat[i]) / denom < 1e-4, f"param {i}"


def test_omega_gradient_for_control_batch_is_zero():
    # omega only enters the objective through exp(omega)^a; for a=0 batches
    # the hazard term contributes no omega gradient, so none is passed
    # upstream and backward reports zeros
    p = init_params(2, (), 2, 2, seed=4)
    out = forward(p, np.zeros((3, 2)))
    grads = backward(p, out, {"h_values": np.ones((3, 2))})
    assert np.array_equal(grads["omega"], np.zeros(2))


def test_adam_zero_gradient_fixed_point():
    p = init_params(2, (3,), 2, 2, seed=5)
    st = OptimizerState(lr=0.1)
    zero = {name: np.zeros_like(a) for name, a in p.arrays().items()}
    q = adam_step(p, zero, st)
    assert np.array_equal(p.to_vector(), q.to_vector())


def test_adam_descent_direction():
    p = init_params(1, (), 1, 1, seed=6)
    p.omega[...] = [1.0]
    st = OptimizerState(lr=0.1)
    q = adam_step(p, {"omega": np.array([2.0])}, st)  # d/dp of p^2 at p=1
    assert 0.0 < q.omega[0] < 1.0


def test_adam_convex_quadratic():
    target = 0.3
    p = init_params(1, (), 1, 1, seed=7)
    p.omega[...] = [1.0]
    st = OptimizerState(lr=0.05)
    for _ in range(200):
        p = adam_step(p, {"omega": 2.0 * (p.omega - target)}, st)
    assert abs(p.omega[0] - target) < 1e-3


def test_adam_rejects_non_finite():
    p = init_params(1, (), 1, 1, seed=8)
    with pytest.raises(FloatingPointError, match="omega"):
        adam_step(p, {"omega": np.array([np.nan])}, OptimizerState())


def test_softmax_properties():
    rng = np.random.default_rng(9)
    z = rng.standard_normal((8, 4)) * 50
    s = softmax(z)
    assert np.all(s >= 0) and np.allclose(s.sum(axis=1), 1.0, atol=1e-10)
    assert np.allclose(softmax(z + 123.0), s, atol=1e-12)
    assert np.allclose(np.exp(log_softmax(z)), s, atol=1e-12)
    assert np.allclose(logsumexp(z, axis=1),
                       np.log(np.exp(z - z.max(axis=1, keepdims=True)).sum(axis=1))
                       + z.max(axis=1), atol=1e-10)
