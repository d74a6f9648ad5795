"""Minimal numerical core: one fully-connected layer, Adam, and the couple of
activations everything else is built from. All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Probabilities are clamped to this range before any log; shared by every loss
# and by the log-probability rewards so reward scales are reproducible.
PROB_CLAMP = 1e-7


@dataclass
class LinearModel:
    """y = W x + b with W of shape (out, in)."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "LinearModel":
        return LinearModel(self.weights.copy(), self.bias.copy())

    def copy_from(self, other: "LinearModel") -> None:
        self.weights[...] = other.weights
        self.bias[...] = other.bias


def init_linear(n_in: int, n_out: int, rng: np.random.Generator) -> LinearModel:
    """Fan-in uniform init, zero bias: initial logits stay small so tanh/softmax
    outputs start near their neutral values."""
    bound = 1.0 / np.sqrt(n_in)
    w = rng.uniform(-bound, bound, size=(n_out, n_in))
    return LinearModel(w, np.zeros(n_out))


def zeros_linear(n_in: int, n_out: int) -> LinearModel:
    return LinearModel(np.zeros((n_out, n_in)), np.zeros(n_out))


def forward(model: LinearModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_in,):
        raise ValueError(f"input shape {x.shape} != ({model.n_in},)")
    return model.weights @ x + model.bias


def backward(model: LinearModel, x: np.ndarray, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of a scalar loss wrt (W, b) given dL/dy: dW = g x^T, db = g."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(grad_out, dtype=np.float64)
    return np.outer(g, x), g.copy()


@dataclass
class AdamState:
    """Adam moments for one LinearModel; lr defaults to the shared 2e-3."""

    m_w: np.ndarray
    v_w: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray
    t: int = 0
    lr: float = 2e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # scratch buffers so the hot loop runs fully in place
    _s1: np.ndarray = field(default=None, repr=False)
    _s2: np.ndarray = field(default=None, repr=False)


def init_adam(model: LinearModel, lr: float = 2e-3) -> AdamState:
    return AdamState(
        m_w=np.zeros_like(model.weights), v_w=np.zeros_like(model.weights),
        m_b=np.zeros_like(model.bias), v_b=np.zeros_like(model.bias),
        lr=lr,
        _s1=np.empty_like(model.weights), _s2=np.empty_like(model.weights),
    )


def _adam_inplace(p: np.ndarray, m: np.ndarray, v: np.ndarray, g: np.ndarray,
                  scale: float, boost: float, st: AdamState,
                  s1: np.ndarray, s2: np.ndarray) -> None:
    # m <- b1 m + (1-b1) g ; v <- b2 v + (1-b2) g^2
    np.multiply(m, st.beta1, out=m)
    np.multiply(g, 1.0 - st.beta1, out=s1)
    np.add(m, s1, out=m)
    np.multiply(v, st.beta2, out=v)
    np.multiply(g, g, out=s1)
    np.multiply(s1, 1.0 - st.beta2, out=s1)
    np.add(v, s1, out=v)
    # p -= lr * mhat / (sqrt(vhat) + eps), with the bias corrections folded into
    # scale = lr/(1-b1^t) and boost = 1/sqrt(1-b2^t)
    np.sqrt(v, out=s2)
    np.multiply(s2, boost, out=s2)
    np.add(s2, st.eps, out=s2)
    np.divide(m, s2, out=s1)
    np.multiply(s1, scale, out=s1)
    np.subtract(p, s1, out=p)


def adam_update(state: AdamState, model: LinearModel,
                grads: tuple[np.ndarray, np.ndarray]) -> tuple[LinearModel, AdamState]:
    """One Adam step with bias correction; mutates model and state in place."""
    d_w, d_b = grads
    state.t += 1
    scale = state.lr / (1.0 - state.beta1 ** state.t)
    boost = 1.0 / np.sqrt(1.0 - state.beta2 ** state.t)
    if state._s1 is None or state._s1.shape != model.weights.shape:
        state._s1 = np.empty_like(model.weights)
        state._s2 = np.empty_like(model.weights)
    _adam_inplace(model.weights, state.m_w, state.v_w, np.asarray(d_w, dtype=np.float64),
                  scale, boost, state, state._s1, state._s2)
    nb = model.bias.shape[0]
    _adam_inplace(model.bias, state.m_b, state.v_b, np.asarray(d_b, dtype=np.float64),
                  scale, boost, state, state._s1.reshape(-1)[:nb], state._s2.reshape(-1)[:nb])
    return model, state


def softmax_beta(logits: np.ndarray, beta: float = 1.0) -> np.ndarray:
    """softmax(beta * logits) with max subtraction; beta is the inverse temperature."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = beta * np.asarray(logits, dtype=np.float64)
    x -= x.max()
    np.exp(x, out=x)
    x /= x.sum()
    return x


def softmax_beta_rows(logits: np.ndarray, beta: float = 1.0) -> np.ndarray:
    """Row-wise softmax_beta for a (batch, n) array."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = beta * np.asarray(logits, dtype=np.float64)
    x -= x.max(axis=1, keepdims=True)
    np.exp(x, out=x)
    x /= x.sum(axis=1, keepdims=True)
    return x


def tanh_vec(logits: np.ndarray) -> np.ndarray:
    return np.tanh(np.asarray(logits, dtype=np.float64))


def clamp_prob(p: np.ndarray | float):
    """Clamp probabilities away from {0, 1} before a log."""
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
