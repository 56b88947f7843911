"""Feed-forward encoder with three linear output heads and a shared
treatment log-effect vector, with exact analytic gradients and an
adaptive-moment (Adam) optimizer.

All math is plain numpy in double precision. The encoder is a stack of
tanh layers (possibly empty, in which case the representation is the
input itself); the heads are linear maps producing Z-gate logits (f),
phi-gate logits (g) and per-cluster log hazard ratios (h).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CmheParams:
    """Encoder weights, three heads, and treatment log-effects omega.

    ``encoder`` is a list of (W, b) pairs, W of shape (fan_in, fan_out).
    Head weights map the representation (d') to K (f, h) or M (g) outputs.
    """

    encoder: list
    f_W: np.ndarray
    f_b: np.ndarray
    g_W: np.ndarray
    g_b: np.ndarray
    h_W: np.ndarray
    h_b: np.ndarray
    omega: np.ndarray

    @property
    def d(self) -> int:
        return self.encoder[0][0].shape[0] if self.encoder else self.f_W.shape[0]

    @property
    def dprime(self) -> int:
        return self.f_W.shape[0]

    @property
    def K(self) -> int:
        return self.f_W.shape[1]

    @property
    def M(self) -> int:
        return self.g_W.shape[1]

    def arrays(self) -> dict:
        """Named views of every parameter block, in a fixed order."""
        out = {}
        for i, (W, b) in enumerate(self.encoder):
            out[f"enc{i}_W"] = W
            out[f"enc{i}_b"] = b
        out.update(f_W=self.f_W, f_b=self.f_b, g_W=self.g_W, g_b=self.g_b,
                   h_W=self.h_W, h_b=self.h_b, omega=self.omega)
        return out

    def copy(self) -> "CmheParams":
        return CmheParams(
            encoder=[(W.copy(), b.copy()) for W, b in self.encoder],
            f_W=self.f_W.copy(), f_b=self.f_b.copy(),
            g_W=self.g_W.copy(), g_b=self.g_b.copy(),
            h_W=self.h_W.copy(), h_b=self.h_b.copy(),
            omega=self.omega.copy(),
        )

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays().values()])

    def from_vector(self, vec: np.ndarray) -> "CmheParams":
        """Return a copy with all blocks filled from a flat vector."""
        new = self.copy()
        pos = 0
        for a in new.arrays().values():
            a[...] = vec[pos:pos + a.size].reshape(a.shape)
            pos += a.size
        if pos != vec.size:
            raise ValueError("vector length does not match parameter count")
        return new


@dataclass
class ForwardOutput:
    repr: np.ndarray      # (n, d')
    f_logits: np.ndarray  # (n, K)
    g_logits: np.ndarray  # (n, M)
    h_values: np.ndarray  # (n, K)
    _hidden: list = field(default_factory=list, repr=False)  # per-layer activations


def init_params(d: int, layer_sizes, K: int, M: int, seed: int = 0) -> CmheParams:
    """Fan-in-scaled symmetric uniform weights, zero biases, zero omega.

    ``layer_sizes`` is the tuple of hidden widths; empty means the encoder
    is the identity (d' = d).
    """
    if d < 1 or K < 1 or M < 1:
        raise ValueError("dimensions d, K, M must be >= 1")
    if any(h < 1 for h in layer_sizes):
        raise ValueError("hidden layer sizes must be >= 1")
    rng = np.random.default_rng(seed)

    def uniform(fan_in, fan_out):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    encoder = []
    fan_in = d
    for h in layer_sizes:
        encoder.append((uniform(fan_in, h), np.zeros(h)))
        fan_in = h
    dprime = fan_in
    return CmheParams(
        encoder=encoder,
        f_W=uniform(dprime, K), f_b=np.zeros(K),
        g_W=uniform(dprime, M), g_b=np.zeros(M),
        h_W=uniform(dprime, K), h_b=np.zeros(K),
        omega=np.zeros(M),
    )


def forward(params: CmheParams, x: np.ndarray) -> ForwardOutput:
    """Pure forward pass over a batch (or single sample) of inputs."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != params.d:
        raise ValueError(f"input dimension {X.shape[1]} != expected {params.d}")
    hidden = [X]
    h = X
    for W, b in params.encoder:
        h = np.tanh(h @ W + b)
        hidden.append(h)
    return ForwardOutput(
        repr=h,
        f_logits=h @ params.f_W + params.f_b,
        g_logits=h @ params.g_W + params.g_b,
        h_values=h @ params.h_W + params.h_b,
        _hidden=hidden,
    )


def backward(params: CmheParams, out: ForwardOutput, upstream: dict) -> dict:
    """Exact gradients of sum_i L_i given per-sample upstream gradients.

    ``upstream`` holds dL/d(f_logits), dL/d(g_logits), dL/d(h_values),
    each (n, .), plus optionally a direct "omega" gradient vector which is
    passed through (omega does not enter the forward pass).
    """
    n = out.repr.shape[0]
    df = np.asarray(upstream.get("f_logits", np.zeros((n, params.K))), dtype=float)
    dg = np.asarray(upstream.get("g_logits", np.zeros((n, params.M))), dtype=float)
    dh = np.asarray(upstream.get("h_values", np.zeros((n, params.K))), dtype=float)
    for name, arr, cols in (("f_logits", df, params.K), ("g_logits", dg, params.M),
                            ("h_values", dh, params.K)):
        if arr.shape != (n, cols):
            raise ValueError(f"upstream {name} has shape {arr.shape}, expected {(n, cols)}")

    rep = out.repr
    grads = {
        "f_W": rep.T @ df, "f_b": df.sum(axis=0),
        "g_W": rep.T @ dg, "g_b": dg.sum(axis=0),
        "h_W": rep.T @ dh, "h_b": dh.sum(axis=0),
        "omega": np.array(upstream.get("omega", np.zeros(params.M)), dtype=float),
    }

    drep = df @ params.f_W.T + dg @ params.g_W.T + dh @ params.h_W.T
    for i in range(len(params.encoder) - 1, -1, -1):
        W, _ = params.encoder[i]
        act = out._hidden[i + 1]
        dz = drep * (1.0 - act * act)  # tanh'
        grads[f"enc{i}_W"] = out._hidden[i].T @ dz
        grads[f"enc{i}_b"] = dz.sum(axis=0)
        drep = dz @ W.T
    return grads


@dataclass
class OptimizerState:
    """Adam accumulators; created lazily from the parameter shapes."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: CmheParams, grads: dict, state: OptimizerState) -> CmheParams:
    """One minimization step; returns updated params, mutates state."""
    arrays = params.arrays()
    for name, g in grads.items():
        if name not in arrays:
            raise ValueError(f"unknown parameter block {name!r}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in block {name!r}")
    new = params.copy()
    arrays = new.arrays()
    state.step += 1
    t = state.step
    for name, a in arrays.items():
        g = np.asarray(grads.get(name, np.zeros_like(a)), dtype=float)
        if g.shape != a.shape:
            raise ValueError(f"gradient shape mismatch for {name!r}")
        m = state.m.setdefault(name, np.zeros_like(a))
        v = state.v.setdefault(name, np.zeros_like(a))
        m[...] = state.beta1 * m + (1 - state.beta1) * g
        v[...] = state.beta2 * v + (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        a -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable normalized exponential (max-subtraction)."""
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def logsumexp(z: np.ndarray, axis=None):
    z = np.asarray(z, dtype=float)
    zmax = np.max(z, axis=axis, keepdims=True)
    zmax = np.where(np.isfinite(zmax), zmax, 0.0)
    out = np.log(np.sum(np.exp(z - zmax), axis=axis, keepdims=True)) + zmax
    return out if axis is None else np.squeeze(out, axis=axis)
