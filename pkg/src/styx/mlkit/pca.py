"""Principal components via singular value decomposition of the centered data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError


@dataclass
class PcaModel:
    components_: np.ndarray                # (k, d), orthonormal rows
    eigenvalues_: np.ndarray               # covariance eigenvalues, non-increasing
    explained_variance_ratio_: np.ndarray  # eigenvalue / total variance
    mean_: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self.components_ + self.mean_

    def to_dict(self) -> dict:
        return {"components": self.components_.tolist(),
                "eigenvalues": self.eigenvalues_.tolist(),
                "explained_variance_ratio": self.explained_variance_ratio_.tolist(),
                "mean": self.mean_.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "PcaModel":
        return cls(components_=np.asarray(payload["components"], dtype=float),
                   eigenvalues_=np.asarray(payload["eigenvalues"], dtype=float),
                   explained_variance_ratio_=np.asarray(
                       payload["explained_variance_ratio"], dtype=float),
                   mean_=np.asarray(payload["mean"], dtype=float))


def fit_pca(X, k: int = 5, allow_clamp: bool = False) -> PcaModel:
    """Top-k principal components of the sample covariance of X.

    Rows of components_ are orthonormal and ordered by non-increasing
    eigenvalue; the sign convention makes each row's largest-magnitude entry
    positive so refits are reproducible. Asking for more components than the
    matrix rank is an error unless allow_clamp is set, in which case k shrinks
    to the achievable rank (used by the stacked pipeline on narrow inputs).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputError("fit_pca needs a 2-D matrix")
    n, d = X.shape
    if n < 2:
        raise InputError("fit_pca needs at least 2 rows")
    if not allow_clamp and (n < k or d < k):
        raise InputError(f"need at least {k} rows and columns for k={k}, got {n}x{d}")
    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    tol = s[0] * max(n, d) * np.finfo(float).eps if s.size and s[0] > 0 else 0.0
    rank = int((s > tol).sum())
    if rank == 0:
        raise InputError("matrix has rank 0, nothing to decompose")
    if k > rank:
        if not allow_clamp:
            raise InputError(f"requested {k} components but the achievable rank is {rank}")
        k = rank
    components = Vt[:k].copy()
    for i in range(k):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    eigenvalues = (s[:k] ** 2) / (n - 1)
    total = float(Xc.var(axis=0, ddof=1).sum())
    ratio = eigenvalues / total if total > 0 else np.zeros_like(eigenvalues)
    return PcaModel(components_=components, eigenvalues_=eigenvalues,
                    explained_variance_ratio_=ratio, mean_=mean)
