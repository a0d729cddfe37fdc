"""Classifier training: binary cross-entropy with Adam (or plain momentum),
inverted dropout, seeded determinism."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateDatasetError
from ..features import NormalizationProfile
from .model import ClassifierModel, sigmoid

_EPS = 1e-7


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 8
    epochs: int = 100
    dropout: float = 0.1
    split: float = 0.8  # train fraction
    seed: int = 0
    hidden: int = 256
    optimizer: str = "adam"  # adam | momentum

    def __post_init__(self):
        if not (0.0 < self.split < 1.0):
            raise ValueError("split must be in (0, 1)")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)  # minibatch-mean, dropout on
    train_loss_eval: list[float] = field(default_factory=list)  # end of epoch, dropout off
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)


def bce_loss(predictions, labels) -> float:
    """Mean binary cross-entropy; predictions clamped to [eps, 1 - eps]."""
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    if p.size == 0:
        raise ValueError("empty input")
    p = np.clip(p, _EPS, 1.0 - _EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def batch_loss_and_grads(params: dict, x: np.ndarray, y: np.ndarray, dropout_mask=None):
    """BCE loss over a batch plus gradients w.r.t. W1, b1, w2, b2.

    x is assumed already standardised. dropout_mask (same shape as the hidden
    activations, already inverse-scaled) applies only during training.
    """
    w1, b1, w2, b2 = params["w1"], params["b1"], params["w2"], params["b2"]
    z1 = x @ w1 + b1
    h = np.maximum(z1, 0.0)
    if dropout_mask is not None:
        h = h * dropout_mask
    z2 = h @ w2 + b2
    p = sigmoid(z2)
    loss = bce_loss(p, y)
    batch = x.shape[0]
    # sigmoid + BCE collapse: dL/dz2 = (p - y) / batch
    dz2 = (p - y) / batch
    gw2 = h.T @ dz2
    gb2 = float(dz2.sum())
    dh = np.outer(dz2, w2)
    if dropout_mask is not None:
        dh = dh * dropout_mask
    dz1 = dh * (z1 > 0.0)
    gw1 = x.T @ dz1
    gb1 = dz1.sum(axis=0)
    return loss, {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}


class _Adam:
    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict):
        self.t += 1
        for k in params:
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * np.square(g)
            m_hat = self.m[k] / (1 - self.beta1**self.t)
            v_hat = self.v[k] / (1 - self.beta2**self.t)
            params[k] = params[k] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class _Momentum:
    def __init__(self, params: dict, lr: float, momentum=0.9):
        self.lr, self.momentum = lr, momentum
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict):
        for k in params:
            self.v[k] = self.momentum * self.v[k] - self.lr * grads[k]
            params[k] = params[k] + self.v[k]


def split_dataset(x: np.ndarray, y: np.ndarray, split: float, seed: int):
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(y))
    n_train = int(round(split * len(y)))
    return idx[:n_train], idx[n_train:]


def train(x, y, cfg: TrainConfig) -> tuple[ClassifierModel, TrainHistory]:
    """Fit the classifier head on raw hybrid vectors with 0/1 labels.

    The statistical block is standardised with training-split statistics,
    which are stored into the model's normalization profile. Deterministic
    under (x, y, cfg).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("x must be N x dim with matching labels")
    classes = set(np.unique(y).tolist())
    if not classes <= {0.0, 1.0}:
        raise ValueError("labels must be 0/1")
    if len(classes) < 2:
        raise DegenerateDatasetError("training data contains a single class")
    if x.shape[0] < cfg.batch_size:
        raise ValueError("dataset smaller than one batch")

    model = ClassifierModel.init(
        input_dim=x.shape[1], hidden=cfg.hidden, dropout_rate=cfg.dropout, rng_seed=cfg.seed
    )
    train_idx, val_idx = split_dataset(x, y, cfg.split, cfg.seed)
    if len(val_idx) == 0:
        raise ValueError("validation split is empty")
    model.profile = NormalizationProfile.fit(x[train_idx][:, -model.stat_dim :])

    xs = model._standardize(x)
    x_train, y_train = xs[train_idx], y[train_idx]
    x_val, y_val = xs[val_idx], y[val_idx]

    params = {"w1": model.w1, "b1": model.b1, "w2": model.w2, "b2": np.float64(model.b2)}
    opt = (
        _Adam(params, cfg.learning_rate)
        if cfg.optimizer == "adam"
        else _Momentum(params, cfg.learning_rate)
    )
    rng = np.random.default_rng(cfg.seed + 1)
    history = TrainHistory()
    n = len(train_idx)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            xb, yb = x_train[batch], y_train[batch]
            mask = None
            if cfg.dropout > 0.0:
                keep = 1.0 - cfg.dropout
                mask = (rng.random((len(batch), cfg.hidden)) < keep) / keep
            loss, grads = batch_loss_and_grads(params, xb, yb, dropout_mask=mask)
            opt.step(params, grads)
            epoch_losses.append(loss)
        history.train_loss.append(float(np.mean(epoch_losses)))
        model.w1, model.b1, model.w2 = params["w1"], params["b1"], params["w2"]
        model.b2 = float(params["b2"])
        history.train_loss_eval.append(bce_loss(model.forward_batch(x[train_idx]), y_train))
        val_pred = model.forward_batch(x[val_idx])
        history.val_loss.append(bce_loss(val_pred, y_val))
        history.val_accuracy.append(float(np.mean((val_pred >= 0.5) == (y_val == 1.0))))
    return model, history
