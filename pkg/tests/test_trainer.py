import math

import numpy as np
import pytest

from medmatch.errors import UnembeddableError
from medmatch.trainer import (
    TrainConfig,
    apply_adapter,
    load_adapter,
    lr_at_step,
    mnrl_loss,
    save_adapter,
    train_adapter,
)


def random_batch(rng, batch, dim):
    anchors = rng.standard_normal((batch, dim))
    positives = anchors + 0.3 * rng.standard_normal((batch, dim))
    return anchors, positives


def test_batch_of_one_has_zero_loss():
    rng = np.random.default_rng(0)
    a, p = random_batch(rng, 1, 4)
    loss, _ = mnrl_loss(a, p, np.eye(4), scale=20.0)
    assert loss == pytest.approx(0.0, abs=1e-12)


def test_identity_similarity_pattern_closed_form():
    # with W=I and orthonormal rows, S = scale * I; at scale=1 the loss is
    # ln(1 + e^{-1}) per row
    a = np.eye(2)
    p = np.eye(2)
    loss, _ = mnrl_loss(a, p, np.eye(2), scale=1.0)
    assert loss == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-12)


def finite_difference_grad(anchors, positives, W, scale, h=1e-5):
    grad = np.zeros_like(W)
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            up = W.copy()
            up[i, j] += h
            down = W.copy()
            down[i, j] -= h
            l_up, _ = mnrl_loss(anchors, positives, up, scale)
            l_down, _ = mnrl_loss(anchors, positives, down, scale)
            grad[i, j] = (l_up - l_down) / (2 * h)
    return grad


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    W = rng.standard_normal((6, 4))
    anchors, positives = random_batch(rng, 3, 4)
    _, grad = mnrl_loss(anchors, positives, W, scale=10.0)
    numeric = finite_difference_grad(anchors, positives, W, scale=10.0)
    denom = np.maximum(np.abs(numeric), 1e-8)
    assert np.max(np.abs(grad - numeric) / denom) < 1e-5


def test_loss_non_negative():
    rng = np.random.default_rng(2)
    for _ in range(10):
        W = rng.standard_normal((5, 5))
        a, p = random_batch(rng, 4, 5)
        loss, _ = mnrl_loss(a, p, W, scale=20.0)
        assert loss >= -1e-12


def test_permutation_equivariance():
    rng = np.random.default_rng(3)
    W = rng.standard_normal((4, 4))
    a, p = random_batch(rng, 5, 4)
    perm = rng.permutation(5)
    loss_a, _ = mnrl_loss(a, p, W, scale=20.0)
    loss_b, _ = mnrl_loss(a[perm], p[perm], W, scale=20.0)
    assert loss_a == pytest.approx(loss_b, abs=1e-12)


def test_zero_projection_raises():
    anchors = np.array([[1.0, 0.0]])
    positives = np.array([[0.0, 1.0]])
    W = np.array([[0.0, 0.0], [0.0, 1.0]])  # annihilates the anchor row
    with pytest.raises(UnembeddableError, match="anchor row 0"):
        mnrl_loss(anchors, positives, W, scale=1.0)


def test_lr_schedule_endpoints():
    peak = 2e-5
    assert lr_at_step(0, 100, peak, 0.1) == 0.0
    assert lr_at_step(10, 100, peak, 0.1) == pytest.approx(peak)
    assert lr_at_step(99, 100, peak, 0.1) == pytest.approx(0.0, abs=peak * 1e-2)


def test_lr_schedule_no_warmup():
    assert lr_at_step(0, 10, 1.0, 0.0) == pytest.approx(1.0)


def test_train_deterministic():
    rng = np.random.default_rng(4)
    pairs = []
    for i in range(12):
        a = rng.standard_normal(6)
        pairs.append((a, a + 0.1 * rng.standard_normal(6), f"M{i}"))
    config = TrainConfig(epochs=3, batch_size=4, lr=0.05, seed=9)
    w1 = train_adapter(pairs, config)
    w2 = train_adapter(pairs, config)
    np.testing.assert_array_equal(w1, w2)


def test_training_reduces_loss():
    rng = np.random.default_rng(5)
    pairs = []
    for i in range(16):
        a = rng.standard_normal(8)
        pairs.append((a, a + 0.5 * rng.standard_normal(8), f"M{i}"))
    anchors = np.vstack([a for a, _, _ in pairs])
    positives = np.vstack([p for _, p, _ in pairs])
    initial, _ = mnrl_loss(anchors, positives, np.eye(8), scale=20.0)
    W = train_adapter(pairs, TrainConfig(epochs=40, batch_size=16, lr=0.01, seed=0))
    final, _ = mnrl_loss(anchors, positives, W, scale=20.0)
    assert final < initial


def test_apply_adapter_identity_and_scaling():
    v = np.array([0.6, 0.8])
    np.testing.assert_allclose(apply_adapter(np.eye(2), v), v, atol=1e-12)
    np.testing.assert_allclose(apply_adapter(2 * np.eye(2), v), v, atol=1e-12)


def test_apply_adapter_output_unit_norm():
    rng = np.random.default_rng(6)
    W = rng.standard_normal((3, 5))
    v = rng.standard_normal(5)
    assert np.linalg.norm(apply_adapter(W, v)) == pytest.approx(1.0, abs=1e-9)


def test_adapter_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    W = rng.standard_normal((4, 4))
    path = tmp_path / "adapter.json"
    save_adapter(W, str(path))
    np.testing.assert_array_equal(load_adapter(str(path)), W)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(lr=0.0)
    with pytest.raises(ValueError):
        TrainConfig(warmup_ratio=1.5)
    with pytest.raises(ValueError):
        TrainConfig(scale=0.0)
