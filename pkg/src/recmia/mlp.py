"""Two-hidden-layer MLP membership classifier, trained from scratch.

Architecture: input k -> hidden1 -> hidden2 -> 1 with rectifier hidden
units and a logistic output. Training minimizes mean binary cross-entropy
by mini-batch gradient descent with a seeded shuffle per epoch. The loss
and its gradient are computed from pre-activation values (logits), which
is the numerically stable formulation; no probability ever enters a log.

The fitted feature standardizer travels with the model so that prediction
applies exactly the transform training saw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import seeding
from .features import MEMBER, NONMEMBER, Standardizer, UserFeature

# Keep returned probabilities strictly inside (0, 1): the logistic
# saturates to exactly 1.0 in float64 for logits above ~37.
_PROB_CLAMP = 1e-12


class TrainingDivergedError(RuntimeError):
    """Attack-model training produced a non-finite loss."""


@dataclass(frozen=True)
class AttackTrainConfig:
    hidden1: int = 32
    hidden2: int = 16
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.hidden1, self.hidden2, self.batch_size) < 1:
            raise ValueError("hidden sizes and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Weights/biases for k -> h1 -> h2 -> 1 plus the frozen standardizer."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    standardizer: Standardizer

    def __post_init__(self) -> None:
        k, h1 = self.w1.shape
        h2 = self.w2.shape[1]
        ok = (
            self.b1.shape == (h1,)
            and self.w2.shape == (h1, h2)
            and self.b2.shape == (h2,)
            and self.w3.shape == (h2, 1)
            and self.b3.shape == (1,)
            and self.standardizer.mean.shape == (k,)
        )
        if not ok:
            raise ValueError("layer shapes do not chain k -> h1 -> h2 -> 1")
        for arr in (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3):
            if not np.isfinite(arr).all():
                raise ValueError("non-finite parameter")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # branch on sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_logits(params: Sequence[np.ndarray], X: np.ndarray) -> np.ndarray:
    w1, b1, w2, b2, w3, b3 = params
    a1 = _relu(X @ w1 + b1)
    a2 = _relu(a1 @ w2 + b2)
    return (a2 @ w3 + b3)[:, 0]


def _bce_from_logits(logits: np.ndarray, y: np.ndarray) -> float:
    # mean over samples of  softplus(z) - y*z,  softplus evaluated stably
    softplus = np.maximum(logits, 0.0) + np.log1p(np.exp(-np.abs(logits)))
    return float(np.mean(softplus - y * logits))


def _init_params(k: int, config: AttackTrainConfig) -> list[np.ndarray]:
    """Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases."""
    rng = seeding.generator(seeding.derive_seed(config.seed, "mlp-init"))
    params: list[np.ndarray] = []
    for fan_in, fan_out in ((k, config.hidden1), (config.hidden1, config.hidden2), (config.hidden2, 1)):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def _batch_gradients(
    params: Sequence[np.ndarray], X: np.ndarray, y: np.ndarray
) -> list[np.ndarray]:
    w1, b1, w2, b2, w3, b3 = params
    z1 = X @ w1 + b1
    a1 = _relu(z1)
    z2 = a1 @ w2 + b2
    a2 = _relu(z2)
    z3 = (a2 @ w3 + b3)[:, 0]
    # d(mean BCE)/dz3 = (sigmoid(z3) - y) / batch
    dz3 = ((_sigmoid(z3) - y) / X.shape[0])[:, None]
    gw3 = a2.T @ dz3
    gb3 = dz3.sum(axis=0)
    dz2 = (dz3 @ w3.T) * (z2 > 0.0)
    gw2 = a1.T @ dz2
    gb2 = dz2.sum(axis=0)
    dz1 = (dz2 @ w2.T) * (z1 > 0.0)
    gw1 = X.T @ dz1
    gb1 = dz1.sum(axis=0)
    return [gw1, gb1, gw2, gb2, gw3, gb3]


def train_attack(
    samples: Sequence[UserFeature], config: AttackTrainConfig
) -> MlpModel:
    """Fit the attack MLP on labeled shadow features.

    Requires at least one sample of each label. The feature standardizer
    is fitted here on the full shadow sample and recorded on the returned
    model. With ``epochs=0`` the returned model is the initialization.
    """
    if not samples:
        raise ValueError("no training samples")
    labels = {s.label for s in samples}
    if labels != {MEMBER, NONMEMBER}:
        raise ValueError(f"need both labels in the training sample, got {sorted(labels)}")
    k = samples[0].vector.shape[0]
    for s in samples:
        if s.vector.shape != (k,):
            raise ValueError(
                f"feature of user {s.user_id} has dimension {s.vector.shape[0]}, expected {k}"
            )
    standardizer = Standardizer.fit([s.vector for s in samples])
    X = np.array([standardizer.apply(s.vector) for s in samples])
    y = np.array([1.0 if s.label == MEMBER else 0.0 for s in samples])

    params = _init_params(k, config)
    shuffle_rng = seeding.generator(seeding.derive_seed(config.seed, "mlp-batch-order"))
    n = X.shape[0]
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            grads = _batch_gradients(params, X[batch], y[batch])
            for p, g in zip(params, grads):
                p -= config.learning_rate * g
        loss = _bce_from_logits(_forward_logits(params, X), y)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite training loss at epoch {epoch}")

    for p in params:
        p.flags.writeable = False
    w1, b1, w2, b2, w3, b3 = params
    return MlpModel(w1=w1, b1=b1, w2=w2, b2=b2, w3=w3, b3=b3, standardizer=standardizer)


def predict_membership(model: MlpModel, feature: np.ndarray) -> float:
    """Membership probability, strictly inside (0, 1).

    Applies the model's stored standardization before the forward pass.
    """
    feature = np.asarray(feature, dtype=np.float64)
    if feature.shape != (model.input_dim,):
        raise ValueError(
            f"feature of shape {feature.shape} does not match input dim {model.input_dim}"
        )
    x = model.standardizer.apply(feature)[None, :]
    params = (model.w1, model.b1, model.w2, model.b2, model.w3, model.b3)
    logit = _forward_logits(params, x)
    prob = _sigmoid(logit)[0]
    return float(np.clip(prob, _PROB_CLAMP, 1.0 - _PROB_CLAMP))


def training_loss(model: MlpModel, samples: Sequence[UserFeature]) -> float:
    """Mean binary cross-entropy of a model on labeled features."""
    X = np.array([model.standardizer.apply(s.vector) for s in samples])
    y = np.array([1.0 if s.label == MEMBER else 0.0 for s in samples])
    params = (model.w1, model.b1, model.w2, model.b2, model.w3, model.b3)
    return _bce_from_logits(_forward_logits(params, X), y)


def dump_attack_model(model: MlpModel, path: str | Path) -> None:
    """Reproducibility dump: shapes, weights, biases and standardizer."""
    payload = {
        "shapes": {
            "w1": list(model.w1.shape),
            "w2": list(model.w2.shape),
            "w3": list(model.w3.shape),
        },
        "weights": {
            "w1": model.w1.tolist(),
            "w2": model.w2.tolist(),
            "w3": model.w3.tolist(),
        },
        "biases": {
            "b1": model.b1.tolist(),
            "b2": model.b2.tolist(),
            "b3": model.b3.tolist(),
        },
        "standardizer": {
            "mean": model.standardizer.mean.tolist(),
            "std": model.standardizer.std.tolist(),
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
