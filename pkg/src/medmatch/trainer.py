"""Metric-learning trainer: a linear embedding adapter fitted with the
multiple-negatives ranking loss (softmax cross-entropy over scaled cosine
similarities, where every other in-batch positive acts as a negative).

The adapter projects frozen base embeddings; anchors are clinic descriptions
and positives their masterlist descriptions. Gradients are exact, including
the L2-normalization Jacobians, so the loop needs no autodiff dependency.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .dense import normalize_vector
from .errors import DimensionMismatchError, UnembeddableError

logger = logging.getLogger(__name__)

_MAX_BATCH_RESHUFFLES = 10


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 4096
    lr: float = 2e-5
    warmup_ratio: float = 0.1
    scale: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.warmup_ratio <= 1.0):
            raise ValueError("warmup_ratio must be in [0, 1]")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


def _project_normalize(W: np.ndarray, X: np.ndarray, side: str):
    """Rows of X through W, L2-normalized; returns (raw, unit, norms)."""
    Z = X @ W.T
    norms = np.linalg.norm(Z, axis=1)
    bad = np.nonzero(norms == 0.0)[0]
    if bad.size:
        raise UnembeddableError(f"{side} row {int(bad[0])} projects to the zero vector")
    return Z, Z / norms[:, None], norms


def mnrl_loss(
    anchors: np.ndarray, positives: np.ndarray, W: np.ndarray, scale: float
) -> tuple[float, np.ndarray]:
    """Loss and exact gradient in W for one batch.

    anchors, positives: (B, d_in) base vectors. Similarities are
    scale * cos(W a_i, W p_j); the loss is mean softmax cross-entropy with the
    diagonal as targets.
    """
    anchors = np.asarray(anchors, dtype=np.float64)
    positives = np.asarray(positives, dtype=np.float64)
    if anchors.shape != positives.shape:
        raise DimensionMismatchError("anchors and positives must have identical shape")
    B = anchors.shape[0]
    if B < 1:
        raise ValueError("batch must be non-empty")

    ZA, A_unit, a_norms = _project_normalize(W, anchors, "anchor")
    ZP, P_unit, p_norms = _project_normalize(W, positives, "positive")

    S = scale * (A_unit @ P_unit.T)  # (B, B)
    S_shift = S - S.max(axis=1, keepdims=True)
    exp_S = np.exp(S_shift)
    softmax = exp_S / exp_S.sum(axis=1, keepdims=True)
    log_probs = S_shift - np.log(exp_S.sum(axis=1, keepdims=True))
    loss = float(-np.mean(np.diag(log_probs)))

    # dL/dS, then back through the cosine and both normalizations
    G = (softmax - np.eye(B)) / B
    dA_unit = scale * (G @ P_unit)
    dP_unit = scale * (G.T @ A_unit)

    # d/dz of z/|z|: (I - u u^T)/|z| applied to the upstream gradient
    dZA = (dA_unit - A_unit * np.sum(dA_unit * A_unit, axis=1, keepdims=True)) / a_norms[:, None]
    dZP = (dP_unit - P_unit * np.sum(dP_unit * P_unit, axis=1, keepdims=True)) / p_norms[:, None]

    grad = dZA.T @ anchors + dZP.T @ positives
    return loss, grad


def lr_at_step(step: int, total_steps: int, peak_lr: float, warmup_ratio: float) -> float:
    """Linear warmup to peak_lr, then cosine decay to zero."""
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    warmup_steps = int(round(warmup_ratio * total_steps))
    if step < warmup_steps:
        return peak_lr * step / warmup_steps
    if total_steps == warmup_steps:
        return peak_lr
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return peak_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


def _init_adapter(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    if d_out == d_in:
        return np.eye(d_in)
    if d_out > d_in:
        raise ValueError("adapter cannot expand dimensionality")
    gauss = rng.standard_normal((d_in, d_out))
    q, _ = np.linalg.qr(gauss)
    return q.T  # orthonormal rows


def _make_batches(
    n: int, masterlist_ids: list[str], batch_size: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Shuffle into batches, reshuffling when a batch repeats a masterlist id.

    Two pairs of one entry in a batch would make the second a false negative;
    after a bounded number of attempts the collision is allowed and logged.
    """
    for attempt in range(_MAX_BATCH_RESHUFFLES + 1):
        perm = rng.permutation(n)
        batches = [perm[i : i + batch_size] for i in range(0, n, batch_size)]
        clean = all(
            len({masterlist_ids[i] for i in batch}) == len(batch) for batch in batches
        )
        if clean:
            return batches
    logger.warning(
        "gave up deduplicating masterlist ids within batches after %d reshuffles",
        _MAX_BATCH_RESHUFFLES,
    )
    return batches


def train_adapter(
    pairs: list[tuple[np.ndarray, np.ndarray, str]], config: TrainConfig
) -> np.ndarray:
    """Fit the adapter by plain gradient descent over (anchor, positive) pairs.

    pairs: (anchor base vector, positive base vector, masterlist_id) triples.
    Deterministic for a fixed seed.
    """
    if not pairs:
        raise ValueError("no training pairs")
    anchors = np.vstack([np.asarray(a, dtype=np.float64) for a, _, _ in pairs])
    positives = np.vstack([np.asarray(p, dtype=np.float64) for _, p, _ in pairs])
    masterlist_ids = [m for _, _, m in pairs]
    d_in = anchors.shape[1]
    if positives.shape[1] != d_in:
        raise DimensionMismatchError("anchor and positive dimensions differ")

    rng = np.random.default_rng(config.seed)
    W = _init_adapter(d_in, d_in, rng)

    n = len(pairs)
    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = config.epochs * steps_per_epoch

    step = 0
    for _ in range(config.epochs):
        for batch in _make_batches(n, masterlist_ids, config.batch_size, rng):
            loss, grad = mnrl_loss(anchors[batch], positives[batch], W, config.scale)
            W = W - lr_at_step(step, total_steps, config.lr, config.warmup_ratio) * grad
            step += 1
    return W


def apply_adapter(W: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project a base vector through the adapter and re-normalize."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != W.shape[1]:
        raise DimensionMismatchError(f"adapter expects dim {W.shape[1]}, got {v.shape[0]}")
    projected = W @ v
    if float(np.linalg.norm(projected)) == 0.0:
        raise UnembeddableError("vector projects to zero under the adapter")
    return normalize_vector(projected)


def save_adapter(W: np.ndarray, path: str) -> None:
    payload = {"d_in": int(W.shape[1]), "d_out": int(W.shape[0]), "w": W.tolist()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_adapter(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    W = np.asarray(payload["w"], dtype=np.float64)
    if W.shape != (payload["d_out"], payload["d_in"]):
        raise ValueError(f"{path}: matrix shape {W.shape} disagrees with header")
    return W
