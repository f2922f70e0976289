"""Decision-tree ensembles: random forest and softmax gradient boosting.

Trees are plain nested dicts (feature, threshold, left, right | leaf, value)
so fitted models serialize to JSON without adapters. Split ties resolve to the
first candidate in scan order, which keeps refits deterministic.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InputError
from .linear import check_classes, one_hot, softmax


def _best_split_gini(X, Y, feature_ids):
    """Weighted-Gini-minimizing split over the given features.
    Returns (score, feature, threshold) or None when nothing separates."""
    n = X.shape[0]
    total = Y.sum(axis=0)
    best = None
    for j in feature_ids:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        boundary_ok = xs[:-1] < xs[1:]
        if not boundary_ok.any():
            continue
        cum = np.cumsum(Y[order], axis=0)
        left = cum[:-1]
        nl = left.sum(axis=1)
        right = total - left
        nr = n - nl
        gini_l = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((right / nr[:, None]) ** 2).sum(axis=1)
        score = (nl * gini_l + nr * gini_r) / n
        score[~boundary_ok] = np.inf
        i = int(np.argmin(score))
        if best is None or score[i] < best[0]:
            best = (float(score[i]), int(j), float((xs[i] + xs[i + 1]) / 2.0))
    return best


def _build_cls_tree(X, Y, depth, max_depth, max_features, rng):
    n, d = X.shape
    counts = Y.sum(axis=0)
    value = [float(c) / n for c in counts]
    if depth >= max_depth or n < 2 or counts.max() == n:
        return {"leaf": True, "value": value}
    if max_features < d:
        feats = np.sort(rng.choice(d, size=max_features, replace=False))
    else:
        feats = np.arange(d)
    split = _best_split_gini(X, Y, feats)
    if split is None:
        return {"leaf": True, "value": value}
    _, j, thr = split
    mask = X[:, j] <= thr
    return {
        "leaf": False, "feature": j, "threshold": thr,
        "left": _build_cls_tree(X[mask], Y[mask], depth + 1, max_depth, max_features, rng),
        "right": _build_cls_tree(X[~mask], Y[~mask], depth + 1, max_depth, max_features, rng),
    }


def _tree_rows(node, X, width):
    """Route rows through a tree; returns (n, width) of leaf values."""
    out = np.zeros((X.shape[0], width))
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if idx.size == 0:
            continue
        if nd["leaf"]:
            out[idx] = nd["value"]
        else:
            mask = X[idx, nd["feature"]] <= nd["threshold"]
            stack.append((nd["left"], idx[mask]))
            stack.append((nd["right"], idx[~mask]))
    return out


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 12


class RandomForestClassifier:
    """Bagged Gini trees, sqrt(d) features per split, bootstrap resampling.
    Tree t draws all its randomness from a generator seeded with seed + t."""

    kind = "forest"

    def __init__(self, n_classes: int = 3, config: ForestConfig | None = None, seed: int = 0):
        self.n_classes = n_classes
        self.config = config or ForestConfig()
        self.seed = seed
        self.trees: list = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        check_classes(y)
        n, d = X.shape
        Y = one_hot(y, self.n_classes)
        max_features = max(1, int(np.sqrt(d)))
        self.trees = []
        for t in range(self.config.n_trees):
            rng = np.random.default_rng(self.seed + t)
            boot = rng.integers(0, n, size=n)
            self.trees.append(_build_cls_tree(X[boot], Y[boot], 0,
                                              self.config.max_depth, max_features, rng))
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        acc = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            acc += _tree_rows(tree, X, self.n_classes)
        return acc / len(self.trees)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_classes": self.n_classes, "seed": self.seed,
                "config": asdict(self.config), "trees": self.trees}

    @classmethod
    def from_dict(cls, payload: dict):
        model = cls(n_classes=payload["n_classes"],
                    config=ForestConfig(**payload["config"]), seed=payload["seed"])
        model.trees = payload["trees"]
        return model


def _best_split_sse(X, r, feature_ids):
    """Sum-of-squared-error-minimizing split for a regression target."""
    n = r.shape[0]
    best = None
    total_sum = r.sum()
    total_sq = (r * r).sum()
    for j in feature_ids:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        boundary_ok = xs[:-1] < xs[1:]
        if not boundary_ok.any():
            continue
        rs = r[order]
        cs = np.cumsum(rs)[:-1]
        cq = np.cumsum(rs * rs)[:-1]
        nl = np.arange(1, n, dtype=float)
        nr = n - nl
        sse_l = cq - cs * cs / nl
        sse_r = (total_sq - cq) - (total_sum - cs) ** 2 / nr
        score = sse_l + sse_r
        score[~boundary_ok] = np.inf
        i = int(np.argmin(score))
        if best is None or score[i] < best[0]:
            best = (float(score[i]), int(j), float((xs[i] + xs[i + 1]) / 2.0))
    return best


def _build_reg_tree(X, r, w, depth, max_depth, leaf_factor):
    # leaf value is the Newton step for the softmax objective:
    # leaf_factor * sum(residual) / sum(|residual| * (1 - |residual|))
    n = r.shape[0]

    def leaf():
        denom = w.sum()
        return {"leaf": True, "value": float(leaf_factor * r.sum() / (denom + 1e-10))}

    if depth >= max_depth or n < 2:
        return leaf()
    split = _best_split_sse(X, r, range(X.shape[1]))
    if split is None:
        return leaf()
    _, j, thr = split
    mask = X[:, j] <= thr
    return {
        "leaf": False, "feature": j, "threshold": thr,
        "left": _build_reg_tree(X[mask], r[mask], w[mask], depth + 1, max_depth, leaf_factor),
        "right": _build_reg_tree(X[~mask], r[~mask], w[~mask], depth + 1, max_depth, leaf_factor),
    }


@dataclass
class GbtConfig:
    n_rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1


class GradientBoostingClassifier:
    """Multiclass boosting on the softmax objective: each round fits one
    least-squares tree per class to the probability residuals. Training is
    deterministic, no randomness involved."""

    kind = "gbt"

    def __init__(self, n_classes: int = 3, config: GbtConfig | None = None, seed: int = 0):
        self.n_classes = n_classes
        self.config = config or GbtConfig()
        self.seed = seed
        self.trees: list = []  # [round][class] nested dicts

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        check_classes(y)
        n = X.shape[0]
        k = self.n_classes
        Y = one_hot(y, k)
        F = np.zeros((n, k))
        leaf_factor = (k - 1) / k
        self.trees = []
        for _ in range(self.config.n_rounds):
            P = softmax(F)
            round_trees = []
            for c in range(k):
                r = Y[:, c] - P[:, c]
                w = np.abs(r) * (1.0 - np.abs(r))
                tree = _build_reg_tree(X, r, w, 0, self.config.max_depth, leaf_factor)
                F[:, c] += self.config.learning_rate * _tree_rows(tree, X, 1)[:, 0]
                round_trees.append(tree)
            self.trees.append(round_trees)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        F = np.zeros((X.shape[0], self.n_classes))
        for round_trees in self.trees:
            for c, tree in enumerate(round_trees):
                F[:, c] += self.config.learning_rate * _tree_rows(tree, X, 1)[:, 0]
        return F

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_classes": self.n_classes, "seed": self.seed,
                "config": asdict(self.config), "trees": self.trees}

    @classmethod
    def from_dict(cls, payload: dict):
        model = cls(n_classes=payload["n_classes"],
                    config=GbtConfig(**payload["config"]), seed=payload["seed"])
        model.trees = payload["trees"]
        return model
