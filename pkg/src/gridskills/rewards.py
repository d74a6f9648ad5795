"""Intrinsic rewards derived from the discriminator, the ascending step
weights, and the Bernoulli reward dropout.

Placement rules: VIC and tuned VIC reward only the episode's final step;
every other kind rewards all steps. The ascending/dropout modifiers combine
as: both on -> keep the raw reward with probability W(t) (a gate, the reward
is not additionally scaled); ascending only -> scale by W(t); dropout only ->
gate with constant probability 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .discriminator import CodeMatrix, ap_class_scores
from .nn import clamp_prob, softmax_beta, softmax_beta_rows, tanh_vec

OVA_KINDS = ("vic", "diayn", "tuned_vic")
AP_KINDS = ("ap_average", "ap_min", "apart")
REWARD_KINDS = OVA_KINDS + AP_KINDS


class WeightFn(str, Enum):
    QUADRATIC = "quadratic"
    LINEAR = "linear"
    QUARTIC = "quartic"
    EXP = "exp"


class ConfigError(ValueError):
    """Invalid reward/discriminator combination or malformed configuration."""


@dataclass(frozen=True)
class RewardSpec:
    """Which intrinsic reward to compute and how to modulate it over time.

    ``beta`` is the softmax inverse temperature used by the tuned-VIC reward.
    ``ascending``/``dropout`` default to the kind's convention (on for apart,
    off otherwise) when left as None.
    """

    kind: str
    beta: float = 10.0
    weight_fn: WeightFn = WeightFn.QUADRATIC
    ascending: bool | None = None
    dropout: bool | None = None

    def __post_init__(self):
        if self.kind not in REWARD_KINDS:
            raise ConfigError(f"unknown reward kind {self.kind!r}; expected one of {REWARD_KINDS}")
        if self.beta <= 0:
            raise ConfigError("beta must be positive")
        object.__setattr__(self, "weight_fn", WeightFn(self.weight_fn))
        default = self.kind == "apart"
        if self.ascending is None:
            object.__setattr__(self, "ascending", default)
        if self.dropout is None:
            object.__setattr__(self, "dropout", default)

    @property
    def disc_mode(self) -> str:
        return "ova" if self.kind in OVA_KINDS else "ap"

    @property
    def last_state_only(self) -> bool:
        return self.kind in ("vic", "tuned_vic")


def ascending_weight(t: int, horizon: int, fn: WeightFn = WeightFn.QUADRATIC) -> float:
    """Monotone step weight W(t) in [0, 1] with W(horizon) = 1."""
    if not 1 <= t <= horizon:
        raise ValueError(f"step {t} outside 1..{horizon}")
    return float(_weights(np.asarray([t]), horizon, fn)[0])


def _weights(t: np.ndarray, horizon: int, fn: WeightFn) -> np.ndarray:
    x = np.asarray(t, dtype=np.float64) / horizon
    fn = WeightFn(fn)
    if fn is WeightFn.QUADRATIC:
        return x * x
    if fn is WeightFn.LINEAR:
        return x
    if fn is WeightFn.QUARTIC:
        return x ** 4
    return np.exp(5.0 * x - 5.0)


def reward_diayn(probs: np.ndarray, z: int, k: int) -> float:
    """log q(z|s) - log(1/K) from the OvA class probabilities."""
    return float(np.log(clamp_prob(probs[z])) + np.log(k))


def reward_vic(probs: np.ndarray, z: int, k: int,
               t: int | None = None, horizon: int | None = None) -> float:
    """Same formula as DIAYN but paid only at the final step; 0 before it."""
    if t is not None and horizon is not None and t < horizon:
        return 0.0
    return reward_diayn(probs, z, k)


def reward_tuned_vic(logits: np.ndarray, z: int, beta: float,
                     t: int | None = None, horizon: int | None = None) -> float:
    """Final-step probability under a sharpened softmax; no log, no baseline."""
    if t is not None and horizon is not None and t < horizon:
        return 0.0
    return float(softmax_beta(logits, beta)[z])


def reward_ap_average(code: CodeMatrix, y_hat: np.ndarray, z: int) -> float:
    """Probability of the current skill after folding all pair outputs."""
    return float(ap_class_scores(code, y_hat)[z])


def reward_ap_min(code: CodeMatrix, y_hat: np.ndarray, z: int) -> float:
    """Worst pairwise score of skill z against any other skill, in (-1, 1).

    Don't-care columns never contribute.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    return float(np.min(code.nz_signs[z] * y_hat[code.nz_cols[z]]))


def apply_dropout(r: float, t: int, horizon: int, fn: WeightFn,
                  rng: np.random.Generator) -> float:
    """Keep ``r`` with probability W(t), else 0. A gate, not a scale."""
    w = ascending_weight(t, horizon, fn)
    return r if rng.random() < w else 0.0


def _modulate(r: np.ndarray, spec: RewardSpec, t: np.ndarray, horizon: int,
              rng: np.random.Generator | None) -> np.ndarray:
    if spec.ascending and spec.dropout:
        gate_p = _weights(t, horizon, spec.weight_fn)
    elif spec.dropout:
        gate_p = np.full(r.shape, 0.5)
    elif spec.ascending:
        return r * _weights(t, horizon, spec.weight_fn)
    else:
        return r
    if rng is None:
        raise ConfigError("dropout needs an rng")
    return np.where(rng.random(r.shape[0]) < gate_p, r, 0.0)


def compute_batch_rewards(spec: RewardSpec, code: CodeMatrix | None,
                          logits: np.ndarray, z: np.ndarray, t: np.ndarray,
                          horizon: int, rng: np.random.Generator | None = None,
                          disc_beta: float = 1.0) -> np.ndarray:
    """Rewards for a batch of discriminator evaluations.

    ``logits`` has shape (B, K) for OvA kinds and (B, L) for AP kinds;
    ``z`` and ``t`` are the batch latents and 1-based step numbers.
    """
    logits = np.asarray(logits, dtype=np.float64)
    z = np.asarray(z)
    t = np.asarray(t)
    rows = np.arange(len(z))

    if spec.kind in AP_KINDS:
        if code is None:
            raise ConfigError("AP rewards need the code matrix")
        if logits.shape[1] != code.n_pairs:
            raise ConfigError(f"reward {spec.kind!r} expects {code.n_pairs} AP logits, "
                              f"got {logits.shape[1]}")
        if spec.kind == "ap_average":
            scores = softmax_beta_rows(tanh_vec(logits) @ code.entries.T.astype(np.float64), 1.0)
            r = scores[rows, z]
        else:  # ap_min / apart
            vals = np.take_along_axis(logits, code.nz_cols[z], axis=1)
            r = np.min(code.nz_signs[z] * np.tanh(vals), axis=1)
    else:
        k = logits.shape[1]
        if code is not None and code.n_classes != k:
            raise ConfigError(f"reward {spec.kind!r} expects {code.n_classes} OvA logits, "
                              f"got {k}")
        if spec.kind == "tuned_vic":
            p = softmax_beta_rows(logits, spec.beta)
            r = p[rows, z]
        else:
            p = softmax_beta_rows(logits, disc_beta)
            r = np.log(clamp_prob(p[rows, z])) + np.log(k)
        if spec.last_state_only:
            r = np.where(t == horizon, r, 0.0)

    return _modulate(np.asarray(r, dtype=np.float64), spec, t, horizon, rng)
