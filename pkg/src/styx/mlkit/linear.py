"""Linear classifiers trained by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InputError


def softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def one_hot(y, k: int) -> np.ndarray:
    y = np.asarray(y, dtype=int)
    Y = np.zeros((y.shape[0], k))
    Y[np.arange(y.shape[0]), y] = 1.0
    return Y


def check_classes(y) -> None:
    if np.unique(np.asarray(y)).size < 2:
        raise InputError("training labels contain a single class")


@dataclass
class LogregConfig:
    l2: float = 1e-4
    max_iter: int = 500
    tol: float = 1e-6
    learning_rate: float = 0.1


class SoftmaxRegression:
    """Multinomial logistic regression; L2 penalty on weights, not the bias."""

    kind = "logreg"

    def __init__(self, n_classes: int = 3, config: LogregConfig | None = None, seed: int = 0):
        self.n_classes = n_classes
        self.config = config or LogregConfig()
        self.seed = seed  # zero-init is deterministic; kept for interface parity
        self.W: np.ndarray | None = None  # (d, k)
        self.b: np.ndarray | None = None  # (k,)

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        check_classes(y)
        n, d = X.shape
        k = self.n_classes
        W = np.zeros((d, k))
        b = np.zeros(k)
        Y = one_hot(y, k)
        cfg = self.config
        for _ in range(cfg.max_iter):
            P = softmax(X @ W + b)
            GW = X.T @ (P - Y) / n + cfg.l2 * W
            gb = (P - Y).mean(axis=0)
            if max(np.abs(GW).max(), np.abs(gb).max()) < cfg.tol:
                break
            W -= cfg.learning_rate * GW
            b -= cfg.learning_rate * gb
        self.W, self.b = W, b
        return self

    def predict_proba(self, X) -> np.ndarray:
        return softmax(np.asarray(X, dtype=float) @ self.W + self.b)

    def loss_and_grad(self, params: np.ndarray, X, Y):
        """Objective and analytic gradient at a flat parameter vector,
        layout [W.ravel(), b]. Used by finite-difference checks."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        n, d = X.shape
        k = Y.shape[1]
        W = params[: d * k].reshape(d, k)
        b = params[d * k:]
        Z = X @ W + b
        Zs = Z - Z.max(axis=1, keepdims=True)
        logp = Zs - np.log(np.exp(Zs).sum(axis=1, keepdims=True))
        loss = -(Y * logp).sum() / n + 0.5 * self.config.l2 * (W ** 2).sum()
        P = np.exp(logp)
        GW = X.T @ (P - Y) / n + self.config.l2 * W
        gb = (P - Y).mean(axis=0)
        return loss, np.concatenate([GW.ravel(), gb])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_classes": self.n_classes, "seed": self.seed,
                "config": asdict(self.config),
                "W": self.W.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, payload: dict):
        model = cls(n_classes=payload["n_classes"],
                    config=LogregConfig(**payload["config"]), seed=payload["seed"])
        model.W = np.array(payload["W"], dtype=float)
        model.b = np.array(payload["b"], dtype=float)
        return model


@dataclass
class SvmConfig:
    l2: float = 1e-3
    epochs: int = 200
    learning_rate: float = 0.05


class LinearSvm:
    """One-vs-rest hinge loss with an L2 penalty, full-batch subgradient
    updates. Probabilities come from a softmax over the per-class margins."""

    kind = "svm"

    def __init__(self, n_classes: int = 3, config: SvmConfig | None = None, seed: int = 0):
        self.n_classes = n_classes
        self.config = config or SvmConfig()
        self.seed = seed
        self.W: np.ndarray | None = None
        self.b: np.ndarray | None = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        check_classes(y)
        n, d = X.shape
        k = self.n_classes
        W = np.zeros((d, k))
        b = np.zeros(k)
        Ysign = np.where(one_hot(y, k) == 1.0, 1.0, -1.0)
        cfg = self.config
        for _ in range(cfg.epochs):
            margins = (X @ W + b) * Ysign
            active = (margins < 1.0) * Ysign  # subgradient contribution per sample/class
            GW = -(X.T @ active) / n + cfg.l2 * W
            gb = -active.mean(axis=0)
            W -= cfg.learning_rate * GW
            b -= cfg.learning_rate * gb
        self.W, self.b = W, b
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.W + self.b

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_classes": self.n_classes, "seed": self.seed,
                "config": asdict(self.config),
                "W": self.W.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, payload: dict):
        model = cls(n_classes=payload["n_classes"],
                    config=SvmConfig(**payload["config"]), seed=payload["seed"])
        model.W = np.array(payload["W"], dtype=float)
        model.b = np.array(payload["b"], dtype=float)
        return model
