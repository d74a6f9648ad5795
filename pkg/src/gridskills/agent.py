"""Latent-conditioned DQN: rollout collection, FIFO replay, epsilon-greedy
action selection, and the interleaved policy/discriminator updates.

All observations are one-hot, so forward passes reduce to column gathers and
gradients to scatter-adds; the dense vectors from ``grids`` encoders are only
used at the API surface (tests assert the two routes agree).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .discriminator import AP, OVA, CodeMatrix
from .grids import N_ACTIONS, GridEnv
from .nn import AdamState, LinearModel, adam_update, clamp_prob, forward, init_adam, init_linear, softmax_beta_rows
from .rewards import RewardSpec, _modulate, compute_batch_rewards


class Transition(NamedTuple):
    """One replay tuple; s and s_next are cell indices, t is 1-based."""

    s: int
    a: int
    s_next: int
    t: int
    z: int


class Batch(NamedTuple):
    """Column arrays of sampled transitions (cells for s / s_next)."""

    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    t: np.ndarray
    z: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest transitions are overwritten first."""

    def __init__(self, capacity: int = 50_000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._cols = np.zeros((5, capacity), dtype=np.int32)  # s, a, s_next, t, z
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def add(self, tr: Transition) -> None:
        self._cols[:, self.cursor] = tr
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def add_many(self, s, a, s_next, t, z) -> None:
        n = len(s)
        stacked = np.stack([s, a, s_next, t, z]).astype(np.int32)
        first = min(n, self.capacity - self.cursor)
        self._cols[:, self.cursor:self.cursor + first] = stacked[:, :first]
        if first < n:
            self._cols[:, :n - first] = stacked[:, first:]
        self.cursor = (self.cursor + n) % self.capacity
        self.size = min(self.size + n, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform with replacement."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(*(self._cols[i, idx] for i in range(5)))

    def state_arrays(self) -> tuple[np.ndarray, int, int]:
        return self._cols, self.size, self.cursor


@dataclass
class QPolicy:
    """Linear Q-network over (location, latent) observations plus its frozen
    target copy and optimizer."""

    model: LinearModel
    target_model: LinearModel
    opt: AdamState
    n_latents: int
    obs_mode: str = "outer"
    epsilon: float = 0.001
    gamma: float = 0.99
    target_interval: int = 200
    updates: int = 0


def make_policy(env: GridEnv, n_latents: int, rng: np.random.Generator,
                obs_mode: str = "outer", lr: float = 2e-3, epsilon: float = 0.001,
                gamma: float = 0.99, target_interval: int = 200) -> QPolicy:
    n_in = env.n_free * n_latents if obs_mode == "outer" else env.n_free + n_latents
    model = init_linear(n_in, N_ACTIONS, rng)
    return QPolicy(model=model, target_model=model.copy(), opt=init_adam(model, lr),
                   n_latents=n_latents, obs_mode=obs_mode, epsilon=epsilon,
                   gamma=gamma, target_interval=target_interval)


def q_values_index(model: LinearModel, policy: QPolicy, n_free: int,
                   fi: int, z: int) -> np.ndarray:
    """Q(s, z, .) through the one-hot structure (no dense vector built)."""
    if policy.obs_mode == "outer":
        return model.weights[:, fi * policy.n_latents + z] + model.bias
    return model.weights[:, fi] + model.weights[:, n_free + z] + model.bias


def select_action(policy: QPolicy, obs: np.ndarray, rng: np.random.Generator) -> int:
    """Epsilon-greedy on the dense observation; ties break to the lowest action."""
    if rng.random() < policy.epsilon:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(forward(policy.model, obs)))


def collect_rollout(env: GridEnv, policy: QPolicy, z: int, buffer: ReplayBuffer,
                    rng: np.random.Generator) -> int:
    """Play one episode of ``env.horizon`` steps from the start cell, store the
    transitions, and return the final cell."""
    horizon = env.horizon
    w = policy.model.weights
    b = policy.model.bias
    nz = policy.n_latents
    outer = policy.obs_mode == "outer"
    n_free = env.n_free
    nxt = env.next_state

    eps_draws = rng.random(horizon)
    path = np.empty(horizon + 1, dtype=np.int32)
    acts = np.empty(horizon, dtype=np.int32)
    fi = env.start_index
    path[0] = fi
    for i in range(horizon):
        if eps_draws[i] < policy.epsilon:
            a = int(rng.integers(N_ACTIONS))
        else:
            if outer:
                q = w[:, fi * nz + z] + b
            else:
                q = w[:, fi] + w[:, n_free + z] + b
            a = int(np.argmax(q))
        acts[i] = a
        fi = nxt[fi, a]
        path[i + 1] = fi

    cells = env.free_states[path]
    buffer.add_many(cells[:-1], acts, cells[1:],
                    np.arange(1, horizon + 1, dtype=np.int32),
                    np.full(horizon, z, dtype=np.int32))
    return int(cells[-1])


def _obs_cols(env: GridEnv, policy: QPolicy, fi: np.ndarray, z: np.ndarray):
    """Hot column(s) of the policy input for each batch row."""
    if policy.obs_mode == "outer":
        return (fi.astype(np.int64) * policy.n_latents + z,)
    return (fi.astype(np.int64), np.int64(env.n_free) + z)


def _batch_q_all(model: LinearModel, cols: tuple[np.ndarray, ...]) -> np.ndarray:
    """Q over all actions for a batch, shape (n_actions, B)."""
    q = model.weights[:, cols[0]]
    for c in cols[1:]:
        q = q + model.weights[:, c]
    return q + model.bias[:, None]


def batch_disc_logits(env: GridEnv, disc_model: LinearModel, cells: np.ndarray) -> np.ndarray:
    """Full discriminator logits for a batch of cells, shape (B, n_out)."""
    fi = env.state_index[cells]
    return disc_model.weights[:, fi].T + disc_model.bias


def batch_rewards_from_model(env: GridEnv, disc_model: LinearModel, code: CodeMatrix | None,
                             spec: RewardSpec, batch: Batch, horizon: int,
                             rng: np.random.Generator | None,
                             disc_beta: float = 1.0) -> np.ndarray:
    """Rewards for a batch, evaluated on s_next with the current discriminator.

    For the pair-minimum rewards only the K-1 relevant pair logits per row are
    gathered; other kinds go through ``compute_batch_rewards`` on full logits.
    """
    if spec.kind in ("ap_min", "apart"):
        fi = env.state_index[batch.s_next]
        cols = code.nz_cols[batch.z]
        logits = disc_model.weights[cols, fi[:, None]] + disc_model.bias[cols]
        base = np.min(code.nz_signs[batch.z] * np.tanh(logits), axis=1)
        return _modulate(base, spec, batch.t, horizon, rng)
    logits = batch_disc_logits(env, disc_model, batch.s_next)
    return compute_batch_rewards(spec, code, logits, batch.z, batch.t, horizon,
                                 rng, disc_beta=disc_beta)


def dqn_update(env: GridEnv, policy: QPolicy, disc_model: LinearModel,
               code: CodeMatrix | None, spec: RewardSpec, buffer: ReplayBuffer,
               batch_size: int = 640, rng: np.random.Generator | None = None,
               dropout_rng: np.random.Generator | None = None,
               batch: Batch | None = None, disc_beta: float = 1.0,
               reward_fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray] | None = None,
               ) -> tuple[float, float]:
    """One Q-learning step on a sampled batch; returns (td loss, mean reward).

    Rewards come from the current discriminator on s_next (or ``reward_fn``,
    a (s_next_cells, z, t) -> rewards hook used by synthetic-reward tests).
    Transitions with t == horizon are terminal: no bootstrap beyond them.
    """
    if batch is None:
        if len(buffer) == 0:
            raise ValueError("cannot update from an empty buffer")
        batch = buffer.sample(batch_size, rng)
    horizon = env.horizon

    if reward_fn is not None:
        r = np.asarray(reward_fn(batch.s_next, batch.z, batch.t), dtype=np.float64)
    else:
        r = batch_rewards_from_model(env, disc_model, code, spec, batch, horizon,
                                     dropout_rng, disc_beta)

    fi = env.state_index[batch.s]
    fi_next = env.state_index[batch.s_next]
    cols = _obs_cols(env, policy, fi, batch.z)
    cols_next = _obs_cols(env, policy, fi_next, batch.z)

    w = policy.model.weights
    q_sa = w[batch.a, cols[0]]
    for c in cols[1:]:
        q_sa = q_sa + w[batch.a, c]
    q_sa = q_sa + policy.model.bias[batch.a]

    q_next = _batch_q_all(policy.target_model, cols_next).max(axis=0)
    target = r + policy.gamma * q_next * (batch.t < horizon)
    delta = q_sa - target
    n = len(delta)
    loss = float(delta @ delta / n)

    g = 2.0 * delta / n
    n_in = policy.model.n_in
    flat = batch.a.astype(np.int64) * n_in + cols[0]
    for c in cols[1:]:
        flat = np.concatenate([flat, batch.a.astype(np.int64) * n_in + c])
    g_all = np.tile(g, len(cols))
    d_w = np.bincount(flat, weights=g_all, minlength=N_ACTIONS * n_in).reshape(N_ACTIONS, n_in)
    d_b = np.bincount(batch.a, weights=g, minlength=N_ACTIONS)
    adam_update(policy.opt, policy.model, (d_w, d_b))

    policy.updates += 1
    if policy.target_interval > 0 and policy.updates % policy.target_interval == 0:
        policy.target_model.copy_from(policy.model)

    return loss, float(r.mean())


def disc_update(env: GridEnv, disc_model: LinearModel, batch: Batch,
                code: CodeMatrix | None, mode: str, mask_dont_cares: bool,
                opt: AdamState, beta: float = 1.0) -> float:
    """One supervised step on (encode_disc_obs(s_next), z); returns the loss."""
    fi = env.state_index[batch.s_next]
    z = batch.z
    n = len(z)
    n_free = env.n_free
    w, b = disc_model.weights, disc_model.bias
    n_out = disc_model.n_out

    if mode == AP:
        if mask_dont_cares:
            cols = code.nz_cols[z]                       # (B, K-1)
            signs = code.nz_signs[z]
            logits = w[cols, fi[:, None]] + b[cols]
            # targets are exactly +-1 here, so with q = (1 + sign*tanh)/2 the
            # BCE per column is -log q and its logit gradient 2*sign*(q - 1)
            np.tanh(logits, out=logits)
            logits *= signs
            q = clamp_prob((logits + 1.0) * 0.5)
            loss = float(-np.log(q).sum() / q.size)
            g = signs * (q - 1.0) * (2.0 / q.size)
            flat = cols.astype(np.int64).ravel() * n_free + np.repeat(fi.astype(np.int64), cols.shape[1])
            d_w = np.bincount(flat, weights=g.ravel(), minlength=n_out * n_free).reshape(n_out, n_free)
            d_b = np.bincount(cols.ravel(), weights=g.ravel(), minlength=n_out)
        else:
            logits = w[:, fi].T + b                      # (B, L)
            p_hat = clamp_prob((np.tanh(logits) + 1.0) / 2.0)
            y01 = (code.entries[z].astype(np.float64) + 1.0) / 2.0
            loss = float(-np.sum(y01 * np.log(p_hat) + (1.0 - y01) * np.log(1.0 - p_hat))
                         / p_hat.size)
            g = 2.0 * (p_hat - y01) / p_hat.size
            d_w = np.zeros((n_free, n_out))
            np.add.at(d_w, fi, g)
            d_w = d_w.T.copy()
            d_b = g.sum(axis=0)
    elif mode == OVA:
        logits = w[:, fi].T + b                          # (B, K)
        p = softmax_beta_rows(logits, beta)
        rows = np.arange(n)
        loss = float(-np.log(clamp_prob(p[rows, z])).mean())
        g = (beta / n) * p
        g[rows, z] -= beta / n
        flat = (np.arange(n_out, dtype=np.int64)[None, :] * n_free + fi[:, None].astype(np.int64)).ravel()
        d_w = np.bincount(flat, weights=g.ravel(), minlength=n_out * n_free).reshape(n_out, n_free)
        d_b = g.sum(axis=0)
    else:
        raise ValueError(f"unknown discriminator mode {mode!r}")

    adam_update(opt, disc_model, (d_w, d_b))
    return loss
