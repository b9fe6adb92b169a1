"""Desk-scale closed-loop experiment.

A synthetic spectrogram classification task and a linear softmax surrogate
learner stand in for the full speech stack. Per-strategy validation losses
feed the policy engine each epoch, which in turn shapes the next epoch's
training augmentation, so the whole feedback loop runs in seconds and its
traces can be inspected like the original accuracy / probability /
relative-loss plots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .errors import SpecPolicyError
from .features import N_STRATEGIES, SampleSeed, Strategy, derive_sample_seed
from .kernels import apply_plan, realize_draws
from .policy import (
    AugmentConfig,
    LossReport,
    Variant,
    advance_epoch,
    fresh_state,
    make_plan,
)


@dataclass
class SyntheticDataset:
    """Class-labeled synthetic spectrograms; deterministic per seed."""

    features: List[np.ndarray]  # each (tau, nu) float32
    labels: np.ndarray  # int labels
    split: str
    generator_seed: int


@dataclass
class SurrogateModel:
    """Softmax classifier over time-mean-pooled features."""

    weights: np.ndarray  # (C, nu)
    bias: np.ndarray  # (C,)

    @classmethod
    def zeros(cls, classes: int, nu: int) -> "SurrogateModel":
        return cls(weights=np.zeros((classes, nu)), bias=np.zeros(classes))

    def predict_proba(self, pooled: np.ndarray) -> np.ndarray:
        logits = pooled @ self.weights.T + self.bias
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        return e / e.sum(axis=1, keepdims=True)

    def cross_entropy(self, pooled: np.ndarray, labels: np.ndarray) -> float:
        probs = self.predict_proba(pooled)
        picked = probs[np.arange(len(labels)), labels]
        return float(-np.mean(np.log(np.maximum(picked, 1e-300))))

    def accuracy(self, pooled: np.ndarray, labels: np.ndarray) -> float:
        return float(np.mean(self.predict_proba(pooled).argmax(axis=1) == labels))


@dataclass(frozen=True)
class SimConfig:
    """Closed-loop run configuration."""

    variant: Variant = Variant.POLICY
    epochs: int = 20
    n_train: int = 500
    n_val: int = 200
    tau: int = 100
    nu: int = 40
    classes: int = 4
    learning_rate: float = 0.1
    batch_size: int = 32
    master_seed: int = 0
    augment: AugmentConfig = field(default_factory=AugmentConfig)


@dataclass
class EpochTrace:
    """One epoch's policy quantities and accuracies."""

    epoch: int
    val_losses: Tuple[float, float, float]
    probabilities: Tuple[float, float, float]
    relative: Tuple[float, float, float]
    lam: Tuple[float, float, float]
    train_accuracy: float
    val_accuracy: float


def _make_split(rng: np.random.Generator, n: int, tau: int, nu: int, classes: int,
                split: str, seed: int) -> SyntheticDataset:
    labels = np.array([i % classes for i in range(n)])
    band = nu // classes
    half = tau // 2
    feats = []
    for label in labels:
        m = rng.standard_normal((tau, nu))
        start = int(rng.integers(0, tau - half, endpoint=True))
        m[start : start + half, label * band : label * band + 3] += 3.0
        feats.append(m.astype(np.float32))
    return SyntheticDataset(features=feats, labels=labels, split=split, generator_seed=seed)


def make_synthetic_dataset(
    seed: int, n_train: int, n_val: int, tau: int, nu: int, classes: int
) -> Tuple[SyntheticDataset, SyntheticDataset]:
    """Noise matrices plus a class-specific tone band over a random half of
    the frames; labels balanced within one sample per split."""
    if min(n_train, n_val, tau, nu, classes) < 1 or classes > nu / 4:
        raise SpecPolicyError(
            "INVALID_SHAPE",
            f"bad dataset spec n_train={n_train} n_val={n_val} tau={tau} nu={nu} classes={classes}",
        )
    rng = np.random.default_rng(derive_sample_seed(seed, 0, 0))
    train = _make_split(rng, n_train, tau, nu, classes, "train", seed)
    val = _make_split(rng, n_val, tau, nu, classes, "validation", seed)
    return train, val


def _pool(features: List[np.ndarray]) -> np.ndarray:
    return np.stack([m.mean(axis=0, dtype=np.float64) for m in features])


def evaluate_strategy_losses(
    model: SurrogateModel,
    val: SyntheticDataset,
    config: AugmentConfig,
    epoch: int,
    master_seed: int,
) -> LossReport:
    """Mean validation cross-entropy with each strategy applied alone,
    at fixed default parameters; never mutates the validation set."""
    losses = []
    n = len(val.features)
    params = config.default_params()
    for strategy in Strategy:
        augmented = []
        for i, m in enumerate(val.features):
            seed = SampleSeed(master_seed, epoch, strategy.value * n + i)
            plan = realize_draws(seed, m, params, {strategy})
            augmented.append(apply_plan(m, plan))
        pooled = _pool(augmented)
        losses.append(model.cross_entropy(pooled, val.labels))
    return LossReport(epoch=epoch, losses=tuple(losses))


def _train_one_pass(
    model: SurrogateModel,
    pooled: np.ndarray,
    labels: np.ndarray,
    lr: float,
    batch_size: int,
    order_seed: int,
) -> None:
    order = np.random.default_rng(order_seed).permutation(len(labels))
    classes = model.weights.shape[0]
    for lo in range(0, len(order), batch_size):
        idx = order[lo : lo + batch_size]
        x, y = pooled[idx], labels[idx]
        probs = model.predict_proba(x)
        grad = probs.copy()
        grad[np.arange(len(y)), y] -= 1.0
        grad /= len(y)
        model.weights -= lr * (grad.T @ x)
        model.bias -= lr * grad.sum(axis=0)


def run_simulation(config: SimConfig) -> List[EpochTrace]:
    """Run the full feedback loop and return one trace row per epoch.

    Epoch 0 trains under the uniform-random bootstrap; every later epoch
    measures per-strategy validation losses, advances the policy, augments
    the training set with per-sample seeded plans, and takes one
    gradient-descent pass.
    """
    train, val = make_synthetic_dataset(
        config.master_seed, config.n_train, config.n_val, config.tau, config.nu, config.classes
    )
    model = SurrogateModel.zeros(config.classes, config.nu)
    state = fresh_state(config.augment, master_seed=config.master_seed)
    train_pooled_clean = _pool(train.features)
    val_pooled_clean = _pool(val.features)
    shape = (config.tau, config.nu)
    traces: List[EpochTrace] = []
    for epoch in range(config.epochs):
        if epoch == 0:
            report = evaluate_strategy_losses(model, val, config.augment, 0, config.master_seed)
        else:
            report = evaluate_strategy_losses(
                model, val, config.augment, epoch, config.master_seed
            )
            state = advance_epoch(state, report)
        augmented = []
        for i, m in enumerate(train.features):
            seed = SampleSeed(config.master_seed, epoch, i)
            plan = make_plan(config.variant, state, seed, shape, config.augment)
            augmented.append(apply_plan(m, plan))
        _train_one_pass(
            model,
            _pool(augmented),
            train.labels,
            config.learning_rate,
            config.batch_size,
            derive_sample_seed(config.master_seed, epoch, 0xABCDEF),
        )
        traces.append(
            EpochTrace(
                epoch=epoch,
                val_losses=report.losses,
                probabilities=state.probabilities if epoch >= 1 else (1 / 3, 1 / 3, 1 / 3),
                relative=state.relative if epoch >= 1 else (1.0, 1.0, 1.0),
                lam=state.lam if epoch >= 1 else (0.0, 0.0, 0.0),
                train_accuracy=model.accuracy(train_pooled_clean, train.labels),
                val_accuracy=model.accuracy(val_pooled_clean, val.labels),
            )
        )
    return traces
