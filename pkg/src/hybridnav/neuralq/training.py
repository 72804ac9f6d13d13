"""Adam optimizer, mini-batch training loop and online inference helpers."""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptyInput, NonFiniteLoss, ShapeMismatch, ValidationError
from ..eskf import ProcessNoiseDiag
from .network import Architecture, NetworkParams, backward, forward

log = logging.getLogger(__name__)

DEFAULT_CLAMP = (0.001, 0.025)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    drop_factor: float = 0.1
    drop_epoch: int = 20
    epochs: int = 30
    batch_size: int = 500
    seed: int = 0

    def __post_init__(self):
        if min(self.learning_rate, self.drop_factor) <= 0 or min(
                self.drop_epoch, self.epochs, self.batch_size) <= 0:
            raise ValidationError("training parameters must be positive")

    def lr_at(self, epoch):
        """Learning rate used during ``epoch`` (1-based)."""
        return self.learning_rate * (self.drop_factor if epoch > self.drop_epoch else 1.0)


class Adam:
    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, params, grads, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            params.tensors[name] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def rmse(params, x, y, chunk=4096):
    """Root mean squared error of the predictions on ``(x, y)``."""
    pred = predict(params, x, chunk)
    return float(np.sqrt(np.mean((pred - y) ** 2)))


def predict(params, x, chunk=4096):
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        raise EmptyInput("no windows to predict")
    return np.concatenate([forward(params, x[i:i + chunk]) for i in range(0, len(x), chunk)])


def train(train_set, config=None, test_set=None, arch=None, init=None, callback=None):
    """Fit the regressor on a ``WindowDataset``.

    Parameters
    ----------
    train_set, test_set : WindowDataset
        ``test_set`` is only used for reporting.
    config : TrainConfig
    arch : Architecture, optional
        Defaults to the standard stack sized for the dataset's window length.
    init : NetworkParams, optional
        Starting point; a fresh seeded initialization otherwise.

    Returns
    -------
    (NetworkParams, list of dict)
        Trained parameters and one history row per epoch. Row 0 holds the
        untrained errors.
    """
    config = config or TrainConfig()
    x = np.asarray(train_set.x, dtype=float)
    y = np.asarray(train_set.y, dtype=float)
    if len(x) == 0:
        raise EmptyInput("training set is empty")
    if init is not None:
        params = init.copy()
    else:
        arch = arch or Architecture(window_length=x.shape[1])
        params = NetworkParams.initialize(arch, config.seed)
    if x.shape[1] != params.arch.window_length:
        raise ShapeMismatch("dataset window length differs from the architecture")
    rng = np.random.default_rng(config.seed)
    opt = Adam(params)

    def record(epoch, lr, mean_loss):
        row = {"epoch": epoch, "lr": lr, "loss": mean_loss,
               "train_rmse": rmse(params, x, y),
               "test_rmse": rmse(params, test_set.x, test_set.y) if test_set is not None
               else float("nan")}
        history.append(row)
        log.info("epoch %d lr %.1e train %.5f test %.5f", epoch, lr, row["train_rmse"],
                 row["test_rmse"])
        if callback is not None:
            callback(row)

    history = []
    record(0, 0.0, float("nan"))
    for epoch in range(1, config.epochs + 1):
        lr = config.lr_at(epoch)
        order = rng.permutation(len(x))
        losses = []
        for b, start in enumerate(range(0, len(x), config.batch_size)):
            idx = order[start:start + config.batch_size]
            grads, value = backward(params, x[idx], y[idx])
            if not np.isfinite(value):
                raise NonFiniteLoss(b, epoch)
            opt.step(params, grads, lr)
            losses.append(value)
        record(epoch, lr, float(np.mean(losses)))
    return params, history


def write_history(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "lr", "train_rmse", "test_rmse"])
        for row in history:
            w.writerow([row["epoch"], repr(row["lr"]), repr(row["train_rmse"]),
                        repr(row["test_rmse"])])


def predict_qc(params, windows, clamp=DEFAULT_CLAMP, eps_bias=0.001):
    """Regress all six channel variances and assemble the diagonal noise model.

    ``windows`` is ``(6, N)`` in channel order fx, fy, fz, wx, wy, wz.
    """
    w = np.asarray(windows, dtype=float)
    if w.shape != (6, params.arch.window_length):
        raise ShapeMismatch(f"expected (6, {params.arch.window_length}) windows, got {w.shape}")
    lo, hi = clamp
    if not 0 < lo <= hi:
        raise ValidationError("clamp must satisfy 0 < min <= max")
    q = np.clip(forward(params, w), lo, hi)
    return ProcessNoiseDiag.from_channels(q, eps_bias)


def config_dict(config):
    return asdict(config)
