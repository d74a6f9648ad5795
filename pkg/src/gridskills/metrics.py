"""Evaluation: effective number of skills (distinct greedy final states),
per-step discriminator accuracy, and the random-walk reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agent import QPolicy, q_values_index
from .discriminator import AP, OVA, CodeMatrix
from .grids import GridEnv
from .nn import LinearModel


def greedy_rollout(env: GridEnv, policy: QPolicy, z: int) -> tuple[int, np.ndarray]:
    """Deterministic (epsilon = 0) episode for skill ``z``.

    Returns (final free-state index, the visited free-state indices s_1..s_T,
    i.e. the state at which each of the T actions was chosen).
    """
    horizon = env.horizon
    states = np.empty(horizon, dtype=np.int32)
    fi = env.start_index
    for i in range(horizon):
        states[i] = fi
        q = q_values_index(policy.model, policy, env.n_free, fi, z)
        fi = env.next_state[fi, int(np.argmax(q))]
    return int(fi), states


def final_states(env: GridEnv, policy: QPolicy, n_latents: int) -> np.ndarray:
    """Greedy final free-state index per latent."""
    return np.array([greedy_rollout(env, policy, z)[0] for z in range(n_latents)],
                    dtype=np.int32)


def effective_skills(env: GridEnv, policy: QPolicy, n_latents: int) -> int:
    """Number of distinct final states over all latents (greedy rollouts)."""
    return int(len(np.unique(final_states(env, policy, n_latents))))


def random_walk_final_states(env: GridEnv, n_walks: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Final free-state indices of uniform-random walks from the start cell."""
    pos = np.full(n_walks, env.start_index, dtype=np.int32)
    for _ in range(env.horizon):
        acts = rng.integers(0, 5, size=n_walks)
        pos = env.next_state[pos, acts]
    return pos


def random_walk_baseline(env: GridEnv, n_latents: int, episodes: int,
                         rng: np.random.Generator) -> float:
    """Mean effective-skill count of a uniform-random agent.

    One episode = n_latents independent walks; the count is the number of
    distinct final states among them, averaged over episodes.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    finals = random_walk_final_states(env, episodes * n_latents, rng)
    finals = np.sort(finals.reshape(episodes, n_latents), axis=1)
    distinct = 1 + (np.diff(finals, axis=1) != 0).sum(axis=1)
    return float(distinct.mean())


def predictions_by_state(env: GridEnv, disc_model: LinearModel, mode: str,
                         code: CodeMatrix | None = None) -> np.ndarray:
    """Predicted class for every free state (ties to the lowest class index).

    The per-state logits are W[:, s] + b; softmax/tanh folding preserves the
    argmax for OvA, and AP folds through the code matrix before the argmax.
    """
    logits = disc_model.weights + disc_model.bias[:, None]  # (n_out, n_free)
    if mode == OVA:
        return np.argmax(logits, axis=0)
    if mode != AP:
        raise ValueError(f"unknown discriminator mode {mode!r}")
    scores = code.entries.astype(np.float64) @ np.tanh(logits)  # (K, n_free)
    return np.argmax(scores, axis=0)


def disc_accuracy_per_step(env: GridEnv, policy: QPolicy, disc_model: LinearModel,
                           mode: str, code: CodeMatrix | None, n_latents: int,
                           rollouts: int = 1) -> np.ndarray:
    """Fraction of (rollout, latent) pairs classified correctly at each step.

    Step t scores the state in which action t was chosen (t=1 is the shared
    start cell, so chance level there is exactly 1/n_latents). Evaluation
    rollouts are greedy and therefore identical across repetitions.
    """
    if rollouts < 1:
        raise ValueError("rollouts must be >= 1")
    pred = predictions_by_state(env, disc_model, mode, code)
    hits = np.zeros(env.horizon)
    for z in range(n_latents):
        _, states = greedy_rollout(env, policy, z)
        hits += pred[states] == z
    return hits / n_latents


@dataclass
class EvalRecord:
    """One evaluation row; ``disc_accuracy`` has one entry per step 1..T."""

    env_steps: int
    seed: int
    n_effective: int
    mean_reward: float
    disc_accuracy: np.ndarray


def csv_header(horizon: int) -> str:
    cols = ["env_steps", "seed", "n_effective", "mean_reward"]
    cols += [f"acc_t{t}" for t in range(1, horizon + 1)]
    return ",".join(cols)


def csv_row(rec: EvalRecord) -> str:
    vals = [str(rec.env_steps), str(rec.seed), str(rec.n_effective), repr(rec.mean_reward)]
    vals += [repr(float(a)) for a in rec.disc_accuracy]
    return ",".join(vals)
