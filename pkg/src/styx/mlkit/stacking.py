"""Two-layer stacked ensemble: five base learners feed a boosted meta-learner.

Out-of-fold stacking: the meta-learner trains on base-learner probabilities
predicted for rows their fold model never saw. Base learners are then refit on
the full data for prediction time. Every random choice derives from the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..corpus import GROUP_ORDER
from ..errors import InputError
from .linear import LinearSvm, LogregConfig, SoftmaxRegression, SvmConfig
from .mlp import MlpClassifier, MlpConfig
from .pca import PcaModel, fit_pca
from .scaler import Scaler, fit_scaler
from .trees import (ForestConfig, GbtConfig, GradientBoostingClassifier,
                    RandomForestClassifier)

LEARNER_KINDS = ("logreg", "forest", "gbt", "svm", "mlp")

LEARNER_CLASSES = {
    "logreg": SoftmaxRegression,
    "forest": RandomForestClassifier,
    "gbt": GradientBoostingClassifier,
    "svm": LinearSvm,
    "mlp": MlpClassifier,
}


@dataclass
class StackConfig:
    pca_components: int = 5
    logreg: LogregConfig = field(default_factory=LogregConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    gbt: GbtConfig = field(default_factory=GbtConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    meta: GbtConfig = field(default_factory=GbtConfig)

    def for_kind(self, kind: str):
        return getattr(self, kind)


def fit_base(kind: str, X, y, seed: int = 0, n_classes: int = 3, config=None):
    """Fit one base learner by kind name; config=None takes the defaults."""
    try:
        cls = LEARNER_CLASSES[kind]
    except KeyError:
        raise InputError(f"unknown learner kind {kind!r}, expected one of "
                         + ", ".join(LEARNER_KINDS)) from None
    return cls(n_classes=n_classes, config=config, seed=seed).fit(X, y)


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Deterministic stratified fold assignment: shuffle each class with the
    seeded generator, deal round-robin. Classes smaller than the fold count
    cannot be stratified and raise."""
    y = np.asarray(y, dtype=int)
    classes = np.unique(y)
    small = [int(c) for c in classes if (y == c).sum() < folds]
    if small:
        raise InputError(f"classes with fewer samples than folds={folds}: {small}")
    rng = np.random.default_rng(seed)
    assign = np.full(y.shape[0], -1, dtype=int)
    for c in classes:
        idx = np.flatnonzero(y == c)
        for pos, i in enumerate(rng.permutation(idx)):
            assign[i] = pos % folds
    return assign


@dataclass
class StackedModel:
    scaler: Scaler
    pca: PcaModel
    base_models: list       # (kind, model) in LEARNER_KINDS order, refit on full data
    meta: GradientBoostingClassifier
    labels: tuple           # AgeGroup per class index
    seed: int
    folds: int
    fold_assign: np.ndarray
    catalog: tuple          # metric ids the raw input columns must match
    catalog_hash: str
    pca_components: int     # effective component count after any clamping
    config: StackConfig


def fit_stacked(X, y, seed: int = 42, folds: int = 5,
                config: Optional[StackConfig] = None,
                catalog: tuple = (), catalog_hash: str = "") -> StackedModel:
    """Fit scaler, PCA, the five base learners, and the boosted meta-learner.

    X: raw feature matrix (NaN for null), y: class indices matching
    GROUP_ORDER. The PCA component count is clamped to the achievable rank of
    the standardized matrix, so narrow inputs still train.
    """
    cfg = config or StackConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.shape[0] != y.shape[0]:
        raise InputError("X and y row counts differ")
    if np.unique(y).size < 2:
        raise InputError("training labels contain a single class")
    assign = stratified_folds(y, folds, seed)
    scaler = fit_scaler(X)
    Xs = scaler.transform(X)
    pca = fit_pca(Xs, k=cfg.pca_components, allow_clamp=True)
    Z = pca.transform(Xs)
    k = len(GROUP_ORDER)
    n = Z.shape[0]
    oof = np.zeros((n, len(LEARNER_KINDS) * k))
    for f in range(folds):
        test = assign == f
        train = ~test
        for li, kind in enumerate(LEARNER_KINDS):
            model = fit_base(kind, Z[train], y[train],
                             seed=seed + 1000 * (f + 1) + 100 * li,
                             n_classes=k, config=cfg.for_kind(kind))
            oof[test, li * k:(li + 1) * k] = model.predict_proba(Z[test])
    meta = GradientBoostingClassifier(n_classes=k, config=cfg.meta).fit(oof, y)
    base_models = [(kind, fit_base(kind, Z, y, seed=seed + 100 * li,
                                   n_classes=k, config=cfg.for_kind(kind)))
                   for li, kind in enumerate(LEARNER_KINDS)]
    return StackedModel(scaler=scaler, pca=pca, base_models=base_models, meta=meta,
                        labels=GROUP_ORDER, seed=int(seed), folds=int(folds),
                        fold_assign=assign, catalog=tuple(catalog),
                        catalog_hash=catalog_hash,
                        pca_components=pca.components_.shape[0], config=cfg)


def stack_inputs(model: StackedModel, X) -> np.ndarray:
    """Raw features -> the 15 base-learner probabilities the meta-learner eats."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    Z = model.pca.transform(model.scaler.transform(X))
    return np.hstack([m.predict_proba(Z) for _, m in model.base_models])


def predict_stacked(model: StackedModel, X):
    """Class indices and calibrated probabilities for raw feature rows.
    Ties on the max probability break to the lowest class index."""
    P = model.meta.predict_proba(stack_inputs(model, X))
    return P.argmax(axis=1), P


@dataclass
class EvalReport:
    accuracy: float
    confusion: list      # rows = true class, columns = predicted
    per_class: dict      # group value -> precision/recall/support/flagged
    absent_classes: list
    n: int

    def to_json(self) -> str:
        obj = {"accuracy": self.accuracy, "n": self.n,
               "per_class": self.per_class, "confusion": self.confusion,
               "absent_classes": self.absent_classes}
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def evaluate(model: StackedModel, X, y_true) -> EvalReport:
    """Accuracy, per-class precision/recall, and the confusion matrix.
    Classes with zero support score 0 and are flagged, not dropped."""
    y_true = np.asarray(y_true, dtype=int)
    if y_true.size == 0:
        raise InputError("evaluation set is empty")
    pred, _ = predict_stacked(model, X)
    k = len(model.labels)
    confusion = np.zeros((k, k), dtype=int)
    for t, p in zip(y_true, pred):
        confusion[t, p] += 1
    accuracy = float(np.trace(confusion)) / y_true.size
    per_class = {}
    absent = []
    for c, group in enumerate(model.labels):
        support = int(confusion[c].sum())
        predicted = int(confusion[:, c].sum())
        if support == 0:
            absent.append(group.value)
        per_class[group.value] = {
            "precision": confusion[c, c] / predicted if predicted else 0.0,
            "recall": confusion[c, c] / support if support else 0.0,
            "support": support,
            "flagged": support == 0 or predicted == 0,
        }
    return EvalReport(accuracy=accuracy, confusion=confusion.tolist(),
                      per_class=per_class, absent_classes=absent, n=int(y_true.size))
