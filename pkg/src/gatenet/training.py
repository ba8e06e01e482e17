"""Losses, the Adam optimizer, the training loop, and evaluation.

Training owns a LogicNet's logits exclusively: forward, analytic backward,
Adam step, repeated over seeded mini-batch epochs. Everything is
deterministic given (seed, config, data) in single-threaded use.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import (
    ALL_GATES_MASK,
    Circuit,
    LogicNet,
    ReadoutConfig,
    build_topology,
    init_params,
    mask_to_bools,
)
from .relaxed import backward, forward_relaxed


class NumericsError(RuntimeError):
    """Raised when a loss or gradient stops being finite."""


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_loss(scores: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient w.r.t. the scores.

    Accepts a single score vector (k,) with an integer label, or a batch
    (batch, k) with labels (batch,). The gradient is that of the returned
    (mean) loss, i.e. (softmax - one_hot) / batch.
    """
    scores = np.asarray(scores)
    squeeze = scores.ndim == 1
    s2 = scores[None, :] if squeeze else scores
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    n, k = s2.shape
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"label out of range [0, {k})")
    shifted = s2 - s2.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1))
    loss = float((logz - shifted[np.arange(n), labels]).mean())
    grad = _softmax_rows(s2)
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return loss, (grad[0] if squeeze else grad)


def mse_loss(prediction: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all entries and its gradient 2*(pred-target)/size."""
    prediction = np.asarray(prediction, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ValueError(f"shape mismatch: {prediction.shape} vs {target.shape}")
    diff = prediction - target
    loss = float((diff**2).mean())
    return loss, 2.0 * diff / diff.size


@dataclass
class TrainConfig:
    """Architecture plus optimizer settings for one training run."""

    layers: int = 2
    width: int = 16
    classes: int | None = None  # default: the dataset's class count
    tau: float = 1.0
    beta: float = 0.0
    transform: str = "none"
    learning_rate: float = 0.01
    batch_size: int = 100
    max_epochs: int = 200
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    loss: str = "cross_entropy"
    eval_every: int = 1
    allowed_gates: int = ALL_GATES_MASK
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.layers < 1 or self.width < 2:
            raise ValueError("need at least 1 gate layer of width >= 2")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.loss not in ("cross_entropy", "mse"):
            raise ValueError("loss must be 'cross_entropy' or 'mse'")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be 'float32' or 'float64'")
        mask_to_bools(self.allowed_gates)

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64


@dataclass
class AdamState:
    """Bias-corrected Adam moments, one pair of arrays per logit matrix."""

    t: int
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(
            t=0,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(
    state: AdamState, params: list[np.ndarray], grads: list[np.ndarray], config: TrainConfig
) -> None:
    """One in-place Adam update. Refuses non-finite gradients with diagnostics."""
    if len(params) != len(grads) or any(p.shape != g.shape for p, g in zip(params, grads)):
        raise ValueError("parameter/gradient shape mismatch")
    for li, g in enumerate(grads):
        bad = ~np.isfinite(g)
        if bad.any():
            raise NumericsError(
                f"non-finite gradient: layer {li}, {int(bad.sum())} of {g.size} entries"
            )
    state.t += 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    lr = config.learning_rate
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + config.adam_epsilon)


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # (k, k) counts, rows = true class
    count: int


@dataclass
class TrainResult:
    final: LogicNet
    best: LogicNet | None
    best_accuracy: float | None
    history: list[dict]
    config: TrainConfig
    seconds: float


def _one_hot(labels: np.ndarray, k: int, dtype) -> np.ndarray:
    out = np.zeros((len(labels), k), dtype=dtype)
    out[np.arange(len(labels)), labels] = 1
    return out


def train(
    config: TrainConfig,
    train_ds,
    eval_ds=None,
    on_record: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Train a fresh network on ``train_ds``.

    ``eval_ds`` (optional) is evaluated every ``eval_every`` epochs; the
    highest-accuracy snapshot is kept alongside the final model. History rows
    carry (epoch, step, split, loss, accuracy); ``on_record`` sees each row as
    it is produced.
    """
    n_samples = len(train_ds.labels)
    if n_samples == 0:
        raise ValueError("training dataset is empty")
    k = config.classes if config.classes is not None else int(train_ds.class_count)
    if config.width % k:
        raise ValueError(f"layer width {config.width} not divisible by {k} classes")
    widths = [int(train_ds.width)] + [config.width] * config.layers
    topo = build_topology(config.seed, widths)
    dtype = config.np_dtype
    net = LogicNet(
        topo,
        init_params(topo, config.seed, dtype),
        ReadoutConfig(k=k, tau=config.tau, beta=config.beta, transform=config.transform),
        allowed_gates=config.allowed_gates,
    )
    x_all = np.ascontiguousarray(train_ds.features, dtype=dtype)
    y_all = np.asarray(train_ds.labels, dtype=np.int64)
    state = AdamState.zeros_like(net.logits)
    shuffle_rng = np.random.default_rng([2, config.seed])
    history: list[dict] = []
    best: LogicNet | None = None
    best_acc: float | None = None
    step = 0
    t0 = time.perf_counter()

    def record(row: dict) -> None:
        history.append(row)
        if on_record is not None:
            on_record(row)

    for epoch in range(config.max_epochs):
        perm = shuffle_rng.permutation(n_samples)
        for lo in range(0, n_samples, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            cache = forward_relaxed(net, x_all[idx])
            if config.loss == "cross_entropy":
                loss, dscores = cross_entropy_loss(cache.scores, y_all[idx])
            else:
                loss, dscores = mse_loss(cache.scores, _one_hot(y_all[idx], k, dtype))
            if not np.isfinite(loss):
                raise NumericsError(f"non-finite loss {loss!r} at epoch {epoch} step {step}")
            grads = backward(net, cache, dscores.astype(dtype))
            adam_step(state, net.logits, grads, config)
            step += 1
            record({"epoch": epoch, "step": step, "split": "train", "loss": loss})
        if eval_ds is not None and (epoch + 1) % config.eval_every == 0:
            acc = evaluate(net, eval_ds).accuracy
            record({"epoch": epoch, "step": step, "split": "eval", "accuracy": acc})
            if best_acc is None or acc > best_acc:
                best_acc, best = acc, net.copy()
    return TrainResult(
        final=net,
        best=best,
        best_accuracy=best_acc,
        history=history,
        config=config,
        seconds=time.perf_counter() - t0,
    )


def evaluate(model: LogicNet | Circuit, dataset, batch_size: int = 4096) -> EvalResult:
    """Argmax classification accuracy plus a (true, predicted) confusion matrix.

    A LogicNet is scored in relaxed mode; a Circuit runs packed Boolean
    inference with popcount (or adder) readout.
    """
    if int(dataset.width) != model.input_width:
        raise ValueError(
            f"dataset width {dataset.width} != model input width {model.input_width}"
        )
    y = np.asarray(dataset.labels, dtype=np.int64)
    k = model.readout.k
    if isinstance(model, Circuit):
        from .packed import circuit_scores

        preds = circuit_scores(model, dataset.features).argmax(axis=1)
    else:
        preds = np.empty(len(y), dtype=np.int64)
        x = dataset.features
        for lo in range(0, len(y), batch_size):
            xb = np.asarray(x[lo : lo + batch_size], dtype=model.dtype)
            preds[lo : lo + len(xb)] = forward_relaxed(model, xb).scores.argmax(axis=1)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (y, preds), 1)
    accuracy = float((preds == y).mean()) if len(y) else 0.0
    return EvalResult(accuracy=accuracy, confusion=confusion, count=len(y))
