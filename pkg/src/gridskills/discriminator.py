"""Skill discriminators: one-vs-all (softmax over K classes) and all-pairs
(K(K-1)/2 binary classifiers wired through a {-1, 0, +1} code matrix).

Pair columns are ordered lexicographically: (0,1), (0,2), ..., (0,K-1),
(1,2), ... For column (i, j) with i < j, row i holds +1 and row j holds -1;
zeros are "don't care" entries that the loss can mask out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import clamp_prob, softmax_beta, tanh_vec

OVA = "ova"
AP = "ap"


@dataclass(frozen=True)
class CodeMatrix:
    entries: np.ndarray                     # int8, shape (K, L)
    pair_index: dict                        # (i, j) with i < j -> column
    nz_cols: np.ndarray                     # int32, shape (K, K-1): nonzero columns per row
    nz_signs: np.ndarray                    # float64, shape (K, K-1): entry signs at nz_cols

    @property
    def n_classes(self) -> int:
        return self.entries.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.entries.shape[1]


def build_code_matrix(k: int) -> CodeMatrix:
    """All-pairs code matrix for ``k`` classes (k >= 2)."""
    if k < 2:
        raise ValueError(f"need at least 2 classes, got {k}")
    n_pairs = k * (k - 1) // 2
    entries = np.zeros((k, n_pairs), dtype=np.int8)
    pair_index = {}
    col = 0
    for i in range(k):
        for j in range(i + 1, k):
            entries[i, col] = 1
            entries[j, col] = -1
            pair_index[(i, j)] = col
            col += 1
    nz_cols = np.empty((k, k - 1), dtype=np.int32)
    nz_signs = np.empty((k, k - 1))
    for z in range(k):
        cols = np.flatnonzero(entries[z]).astype(np.int32)
        nz_cols[z] = cols
        nz_signs[z] = entries[z, cols]
    return CodeMatrix(entries=entries, pair_index=pair_index,
                      nz_cols=nz_cols, nz_signs=nz_signs)


def ap_targets(code: CodeMatrix, z: int) -> np.ndarray:
    """Per-pair binary targets for class ``z``: row z of the code matrix."""
    if not 0 <= z < code.n_classes:
        raise ValueError(f"class {z} out of range [0, {code.n_classes})")
    return code.entries[z].astype(np.float64)


@dataclass
class DiscOutput:
    """One discriminator evaluation: raw logits plus the mode's activation.

    OvA activates with softmax_beta(logits, beta); AP with tanh.
    """

    mode: str
    logits: np.ndarray
    beta: float = 1.0
    activated: np.ndarray = field(init=False)

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.mode == OVA:
            self.activated = softmax_beta(self.logits, self.beta)
        elif self.mode == AP:
            self.activated = tanh_vec(self.logits)
        else:
            raise ValueError(f"unknown discriminator mode {self.mode!r}")


def _bce_terms(p_hat: np.ndarray, y01: np.ndarray) -> np.ndarray:
    p = clamp_prob(p_hat)
    return -(y01 * np.log(p) + (1.0 - y01) * np.log(1.0 - p))


def ap_loss_and_grad(out: DiscOutput, z: int, code: CodeMatrix,
                     mask_dont_cares: bool = True) -> tuple[float, np.ndarray]:
    """Binary cross-entropy over pairs, averaged, plus its gradient wrt logits.

    Predictions and targets are mapped from [-1, 1] to [0, 1] via (v+1)/2.
    With masking the average runs over the K-1 columns whose target is nonzero;
    without it, all L columns contribute and don't-cares keep target 0.5.

    The clamp only guards the logs; the gradient keeps its unsaturated closed
    form 2*(p_hat - y)/n so learning does not stall at the clamp boundary.
    """
    if out.mode != AP:
        raise ValueError("ap_loss_and_grad needs an AP output")
    grad = np.zeros(code.n_pairs)
    if mask_dont_cares:
        cols = code.nz_cols[z]
        p_hat = (out.activated[cols] + 1.0) / 2.0
        y01 = (code.nz_signs[z] + 1.0) / 2.0
        n = cols.shape[0]
        loss = float(_bce_terms(p_hat, y01).sum() / n)
        grad[cols] = 2.0 * (clamp_prob(p_hat) - y01) / n
    else:
        p_hat = (out.activated + 1.0) / 2.0
        y01 = (ap_targets(code, z) + 1.0) / 2.0
        n = code.n_pairs
        loss = float(_bce_terms(p_hat, y01).sum() / n)
        grad[...] = 2.0 * (clamp_prob(p_hat) - y01) / n
    return loss, grad


def ova_loss_and_grad(out: DiscOutput, z: int) -> tuple[float, np.ndarray]:
    """Categorical cross-entropy -log p_z under softmax_beta; grad = beta*(p - onehot)."""
    if out.mode != OVA:
        raise ValueError("ova_loss_and_grad needs an OvA output")
    p = out.activated
    loss = float(-np.log(clamp_prob(p[z])))
    grad = out.beta * p.copy()
    grad[z] -= out.beta
    return loss, grad


def ap_class_scores(code: CodeMatrix, y_hat: np.ndarray) -> np.ndarray:
    """Fold the L pairwise outputs back to a distribution over the K classes."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y_hat.shape != (code.n_pairs,):
        raise ValueError(f"expected {code.n_pairs} pair outputs, got {y_hat.shape}")
    return softmax_beta(code.entries @ y_hat, 1.0)


def predict_class(out: DiscOutput, code: CodeMatrix | None = None) -> int:
    """Most likely class; ties break toward the lowest index (np.argmax order)."""
    if out.mode == OVA:
        return int(np.argmax(out.activated))
    if code is None:
        raise ValueError("AP prediction needs the code matrix")
    return int(np.argmax(ap_class_scores(code, out.activated)))
