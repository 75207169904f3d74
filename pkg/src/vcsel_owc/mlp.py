"""One-hidden-layer perceptron in plain NumPy.

Two heads share the 5 -> H ReLU trunk:

* ``softmax`` with cross-entropy, predicting the serving-beam index;
* ``sigmoid`` with mean-squared error, predicting a normalised position.

Inputs are log10 RSS values standardised with statistics taken from the
training rows; the scaler travels with the model so callers pass raw watts.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

FORMAT = "vcsel-owc-mlp"
VERSION = 1
_RSS_FLOOR = 1e-30


def log_features(rss) -> np.ndarray:
    return np.log10(np.maximum(np.asarray(rss, dtype=float), _RSS_FLOOR))


@dataclass
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    output: str = "softmax"
    feature_mean: np.ndarray | None = None
    feature_std: np.ndarray | None = None

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.w1.shape[0], self.w1.shape[1], self.w2.shape[1])

    @classmethod
    def init(cls, n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator,
             output: str = "softmax") -> "MlpModel":
        if output not in ("softmax", "sigmoid"):
            raise ValueError(f"unknown output activation {output!r}")
        if n_hidden < 1:
            raise ValueError("n_hidden must be >= 1")
        w1 = rng.normal(0.0, math.sqrt(2.0 / n_in), (n_in, n_hidden))
        w2 = rng.normal(0.0, math.sqrt(1.0 / n_hidden), (n_hidden, n_out))
        return cls(w1, np.zeros(n_hidden), w2, np.zeros(n_out), output)

    # -- scaling -----------------------------------------------------------
    def fit_scaler(self, rss):
        f = log_features(rss)
        self.feature_mean = f.mean(axis=0)
        std = f.std(axis=0)
        self.feature_std = np.where(std > 0, std, 1.0)

    def transform(self, rss) -> np.ndarray:
        f = log_features(rss)
        if self.feature_mean is None:
            return f
        return (f - self.feature_mean) / self.feature_std

    # -- forward / backward on already-scaled inputs ------------------------
    def forward(self, x):
        z1 = x @ self.w1 + self.b1
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ self.w2 + self.b2
        if self.output == "softmax":
            z2 = z2 - z2.max(axis=1, keepdims=True)
            e = np.exp(z2)
            out = e / e.sum(axis=1, keepdims=True)
        else:
            out = 1.0 / (1.0 + np.exp(-z2))
        return out, (x, z1, a1)

    def loss_and_grads(self, x, target):
        """Mean loss over the batch and its gradients w.r.t. every parameter.

        ``target`` is an int label vector (softmax head) or an array of the
        output shape with entries in [0, 1] (sigmoid head).
        """
        out, (xb, z1, a1) = self.forward(x)
        n = x.shape[0]
        if self.output == "softmax":
            p = out[np.arange(n), target]
            loss = -np.mean(np.log(np.maximum(p, 1e-300)))
            dz2 = out.copy()
            dz2[np.arange(n), target] -= 1.0
            dz2 /= n
        else:
            diff = out - target
            loss = np.mean(np.sum(diff**2, axis=1))
            dz2 = 2.0 * diff * out * (1.0 - out) / n
        grads = {"w2": a1.T @ dz2, "b2": dz2.sum(axis=0)}
        dz1 = (dz2 @ self.w2.T) * (z1 > 0)
        grads["w1"] = xb.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        return float(loss), grads

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    # -- inference ---------------------------------------------------------
    def predict_proba(self, rss) -> np.ndarray:
        rss = np.atleast_2d(np.asarray(rss, dtype=float))
        if rss.shape[1] != self.dims[0]:
            raise ValueError(f"expected {self.dims[0]} features, got {rss.shape[1]}")
        return self.forward(self.transform(rss))[0]

    # -- persistence ---------------------------------------------------------
    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a, dtype=float).tolist()
        return {
            "format": FORMAT, "version": VERSION, "dims": list(self.dims),
            "output": self.output,
            "w1": arr(self.w1), "b1": arr(self.b1), "w2": arr(self.w2), "b2": arr(self.b2),
            "feature_mean": arr(self.feature_mean), "feature_std": arr(self.feature_std),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        if d.get("format") != FORMAT:
            raise ValueError("not an MLP weight file")
        if d.get("version") != VERSION:
            raise ValueError(f"unsupported weight-file version {d.get('version')}")
        def arr(k):
            return None if d.get(k) is None else np.asarray(d[k], dtype=float)
        m = cls(arr("w1"), arr("b1"), arr("w2"), arr("b2"), d["output"],
                arr("feature_mean"), arr("feature_std"))
        if list(m.dims) != list(d["dims"]):
            raise ValueError("weight shapes do not match the dims header")
        return m

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "MlpModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train(model: MlpModel, x, target, epochs: int, learning_rate: float,
          rng: np.random.Generator, batch_size: int = 256,
          beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> list[float]:
    """Mini-batch gradient descent with Adam moment estimates.

    ``x`` is already scaled.  Returns the mean training loss of every epoch.
    Raises ``FloatingPointError`` if the loss stops being finite.
    """
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    m = {k: np.zeros_like(v) for k, v in model.params().items()}
    v = {k: np.zeros_like(p) for k, p in model.params().items()}
    step = 0
    history = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, grads = model.loss_and_grads(x[idx], target[idx])
            if not math.isfinite(loss):
                raise FloatingPointError(
                    f"loss diverged at epoch {epoch}, step {step} (lr={learning_rate})")
            step += 1
            for k, p in model.params().items():
                g = grads[k]
                m[k] = beta1 * m[k] + (1 - beta1) * g
                v[k] = beta2 * v[k] + (1 - beta2) * g * g
                mhat = m[k] / (1 - beta1**step)
                vhat = v[k] / (1 - beta2**step)
                p -= learning_rate * mhat / (np.sqrt(vhat) + eps)
            total += loss * len(idx)
        history.append(total / n)
        log.debug("epoch %d loss %.6g", epoch, history[-1])
    return history
