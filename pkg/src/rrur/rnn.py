"""Elman recurrent network for motor angles -> (beta, gamma, z_p), written with numpy.

Hidden update ``h_t = tanh(W_h h_{t-1} + W_x x_t + b)`` with ``h_0 = 0`` and a
linear readout ``y_t = W_out h_t + b_out``. Inputs and outputs are z-scored
with training statistics. Training minimises the mean squared error of the
normalised outputs with backpropagation through time and Adam.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivergenceError

log = logging.getLogger(__name__)

PARAM_NAMES = ("W_x", "W_h", "b", "W_out", "b_out")


@dataclass(frozen=True)
class RnnConfig:
    hidden_size: int = 64
    seq_len: int = 1
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 7

    def __post_init__(self):
        for name in ("hidden_size", "seq_len", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")


@dataclass
class RnnModel:
    params: dict[str, np.ndarray]
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray
    config: RnnConfig = field(default_factory=RnnConfig)
    train_time_s: float = 0.0

    kind = "rnn"

    @property
    def hidden_size(self) -> int:
        return self.params["W_h"].shape[0]

    def forward(self, theta_sequence) -> np.ndarray:
        """Run one sequence of motor angles (T, 3); returns poses (T, 3)."""
        x = (np.asarray(theta_sequence, dtype=float).reshape(1, -1, 3) - self.x_mean) / self.x_std
        out, _ = forward_normalized(self.params, x)
        return out[0] * self.y_std + self.y_mean

    def predict(self, theta) -> np.ndarray:
        """Pose for each motor-angle triple, each fed as a length-1 sequence."""
        theta = np.asarray(theta, dtype=float)
        x = ((theta.reshape(-1, 3) - self.x_mean) / self.x_std)[:, None, :]
        out, _ = forward_normalized(self.params, x)
        return (out[:, 0] * self.y_std + self.y_mean).reshape(theta.shape)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "storage": "row-major",
            "activation": "tanh",
            "weights": {k: v.tolist() for k, v in self.params.items()},
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
            "y_mean": self.y_mean.tolist(),
            "y_std": self.y_std.tolist(),
            "config": asdict(self.config),
            "train_time_s": self.train_time_s,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RnnModel":
        if d.get("kind") != cls.kind:
            raise ValueError("not an RNN model file")
        params = {k: np.array(d["weights"][k], dtype=float) for k in PARAM_NAMES}
        return cls(
            params=params,
            x_mean=np.array(d["x_mean"]),
            x_std=np.array(d["x_std"]),
            y_mean=np.array(d["y_mean"]),
            y_std=np.array(d["y_std"]),
            config=RnnConfig(**d["config"]),
            train_time_s=float(d.get("train_time_s", 0.0)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "RnnModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def init_params(hidden_size: int, rng: np.random.Generator, n_in: int = 3, n_out: int = 3) -> dict:
    """Uniform(+-1/sqrt(fan_in)) initialisation."""
    def u(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    return {
        "W_x": u((hidden_size, n_in), n_in),
        "W_h": u((hidden_size, hidden_size), hidden_size),
        "b": u((hidden_size,), hidden_size),
        "W_out": u((n_out, hidden_size), hidden_size),
        "b_out": u((n_out,), hidden_size),
    }


def forward_normalized(params: dict, x: np.ndarray):
    """Forward pass on normalised inputs ``x`` of shape (B, T, 3).

    Returns ``(y, hs)`` with ``y`` of shape (B, T, 3) and ``hs`` the hidden
    states (B, T + 1, H) including ``h_0 = 0``.
    """
    B, T, _ = x.shape
    H = params["W_h"].shape[0]
    hs = np.zeros((B, T + 1, H))
    pre_x = x @ params["W_x"].T + params["b"]
    for t in range(T):
        hs[:, t + 1] = np.tanh(pre_x[:, t] + hs[:, t] @ params["W_h"].T)
    y = hs[:, 1:] @ params["W_out"].T + params["b_out"]
    return y, hs


def loss_and_grads(params: dict, x: np.ndarray, y_true: np.ndarray):
    """Mean squared error over all outputs and its gradients (BPTT)."""
    y, hs = forward_normalized(params, x)
    B, T, n_out = y.shape
    diff = y - y_true
    loss = float(np.mean(diff**2))
    dy = 2.0 * diff / diff.size

    grads = {k: np.zeros_like(v) for k, v in params.items()}
    h_seq = hs[:, 1:]
    grads["W_out"] = np.einsum("bto,bth->oh", dy, h_seq)
    grads["b_out"] = dy.sum(axis=(0, 1))
    dh_next = np.zeros((B, params["W_h"].shape[0]))
    W_out, W_h = params["W_out"], params["W_h"]
    for t in reversed(range(T)):
        dh = dy[:, t] @ W_out + dh_next
        da = dh * (1.0 - hs[:, t + 1] ** 2)
        grads["W_x"] += da.T @ x[:, t]
        grads["W_h"] += da.T @ hs[:, t]
        grads["b"] += da.sum(axis=0)
        dh_next = da @ W_h
    return loss, grads


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, lr):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k in params:
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


class Sgd:
    def __init__(self, params, lr):
        self.lr = lr

    def step(self, params, grads, lr):
        for k in params:
            params[k] -= lr * grads[k]


def _windows(x: np.ndarray, y: np.ndarray, seq_len: int):
    """Consecutive, non-overlapping windows of an ordered dataset (B, T, 3)."""
    n = (len(x) // seq_len) * seq_len
    if n == 0:
        raise ValueError("dataset shorter than seq_len")
    return x[:n].reshape(-1, seq_len, 3), y[:n].reshape(-1, seq_len, 3)


def _stats(a):
    mean = a.mean(axis=0)
    std = a.std(axis=0)
    return mean, np.where(std > 0, std, 1.0)


def train(config: RnnConfig, train_set, val_set):
    """Fit a model; returns ``(model, trace)`` with per-epoch train/val losses."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    x_mean, x_std = _stats(train_set.theta)
    y_mean, y_std = _stats(train_set.target)
    xs, ys = _windows((train_set.theta - x_mean) / x_std, (train_set.target - y_mean) / y_std, config.seq_len)
    xv, yv = _windows((val_set.theta - x_mean) / x_std, (val_set.target - y_mean) / y_std, config.seq_len)

    params = init_params(config.hidden_size, rng)
    opt = Adam(params, config.learning_rate) if config.optimizer == "adam" else Sgd(params, config.learning_rate)
    n_batches = int(np.ceil(len(xs) / config.batch_size))
    trace = {"train": [], "val": []}
    for epoch in range(config.epochs):
        order = rng.permutation(len(xs))
        running = 0.0
        # overflow is caught below as a non-finite loss
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n_batches):
                idx = order[k * config.batch_size : (k + 1) * config.batch_size]
                loss, grads = loss_and_grads(params, xs[idx], ys[idx])
                opt.step(params, grads, config.learning_rate)
                running += loss * len(idx)
            train_loss = running / len(xs)
            val_loss = float(np.mean((forward_normalized(params, xv)[0] - yv) ** 2))
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)) or not all(
            np.all(np.isfinite(v)) for v in params.values()
        ):
            raise DivergenceError("loss became non-finite", epoch=epoch)
        trace["train"].append(train_loss)
        trace["val"].append(val_loss)
        log.info("epoch %d train %.3e val %.3e", epoch + 1, train_loss, val_loss)

    model = RnnModel(params, x_mean, x_std, y_mean, y_std, config, time.perf_counter() - t0)
    return model, trace
