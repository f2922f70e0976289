"""Single-hidden-layer perceptron trained by full-batch gradient descent
with classical momentum."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InputError
from .linear import check_classes, one_hot, softmax


@dataclass
class MlpConfig:
    hidden: int = 32
    epochs: int = 200
    learning_rate: float = 0.01
    momentum: float = 0.9


class MlpClassifier:
    """ReLU hidden layer, softmax output, mean cross-entropy loss.

    Weights start from a symmetric uniform range scaled by fan-in and fan-out,
    drawn from a generator seeded with `seed`, so identical seeds give
    identical fits.
    """

    kind = "mlp"

    def __init__(self, n_classes: int = 3, config: MlpConfig | None = None, seed: int = 0):
        self.n_classes = n_classes
        self.config = config or MlpConfig()
        self.seed = seed
        self.W1 = self.b1 = self.W2 = self.b2 = None

    def _init_params(self, d: int):
        rng = np.random.default_rng(self.seed)
        h = self.config.hidden
        k = self.n_classes
        lim1 = np.sqrt(6.0 / (d + h))
        lim2 = np.sqrt(6.0 / (h + k))
        W1 = rng.uniform(-lim1, lim1, size=(d, h))
        W2 = rng.uniform(-lim2, lim2, size=(h, k))
        return W1, np.zeros(h), W2, np.zeros(k)

    @staticmethod
    def _forward(X, W1, b1, W2, b2):
        Z1 = X @ W1 + b1
        H = np.maximum(Z1, 0.0)
        Z2 = H @ W2 + b2
        return Z1, H, Z2

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        check_classes(y)
        n, d = X.shape
        Y = one_hot(y, self.n_classes)
        W1, b1, W2, b2 = self._init_params(d)
        cfg = self.config
        velocities = [np.zeros_like(p) for p in (W1, b1, W2, b2)]
        for _ in range(cfg.epochs):
            Z1, H, Z2 = self._forward(X, W1, b1, W2, b2)
            P = softmax(Z2)
            dZ2 = (P - Y) / n
            dW2 = H.T @ dZ2
            db2 = dZ2.sum(axis=0)
            dH = dZ2 @ W2.T
            dZ1 = dH * (Z1 > 0)
            dW1 = X.T @ dZ1
            db1 = dZ1.sum(axis=0)
            params = [W1, b1, W2, b2]
            grads = [dW1, db1, dW2, db2]
            for i in range(4):
                velocities[i] = cfg.momentum * velocities[i] - cfg.learning_rate * grads[i]
                params[i] += velocities[i]
        self.W1, self.b1, self.W2, self.b2 = W1, b1, W2, b2
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        _, _, Z2 = self._forward(X, self.W1, self.b1, self.W2, self.b2)
        return softmax(Z2)

    def loss_and_grad(self, params: np.ndarray, X, Y):
        """Mean cross-entropy and its gradient at a flat parameter vector,
        layout [W1, b1, W2, b2]. Used by finite-difference checks."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        n, d = X.shape
        h = self.config.hidden
        k = self.n_classes
        sizes = [d * h, h, h * k, k]
        offs = np.cumsum([0] + sizes)
        W1 = params[offs[0]:offs[1]].reshape(d, h)
        b1 = params[offs[1]:offs[2]]
        W2 = params[offs[2]:offs[3]].reshape(h, k)
        b2 = params[offs[3]:offs[4]]
        Z1, H, Z2 = self._forward(X, W1, b1, W2, b2)
        Zs = Z2 - Z2.max(axis=1, keepdims=True)
        logp = Zs - np.log(np.exp(Zs).sum(axis=1, keepdims=True))
        loss = -(Y * logp).sum() / n
        P = np.exp(logp)
        dZ2 = (P - Y) / n
        dW2 = H.T @ dZ2
        db2 = dZ2.sum(axis=0)
        dH = dZ2 @ W2.T
        dZ1 = dH * (Z1 > 0)
        dW1 = X.T @ dZ1
        db1 = dZ1.sum(axis=0)
        grad = np.concatenate([dW1.ravel(), db1, dW2.ravel(), db2])
        return loss, grad

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_classes": self.n_classes, "seed": self.seed,
                "config": asdict(self.config),
                "W1": self.W1.tolist(), "b1": self.b1.tolist(),
                "W2": self.W2.tolist(), "b2": self.b2.tolist()}

    @classmethod
    def from_dict(cls, payload: dict):
        model = cls(n_classes=payload["n_classes"],
                    config=MlpConfig(**payload["config"]), seed=payload["seed"])
        for name in ("W1", "b1", "W2", "b2"):
            setattr(model, name, np.array(payload[name], dtype=float))
        return model
