"""Feature standardization with mean imputation and degenerate-column dropping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError


@dataclass
class Scaler:
    mean_: np.ndarray   # imputation and centering means, full input width
    sd_: np.ndarray     # sample standard deviations over imputed columns
    keep_: np.ndarray   # boolean mask of retained columns
    dropped_: list = field(default_factory=list)
    warnings_: list = field(default_factory=list)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.mean_.shape[0]:
            raise InputError(f"expected {self.mean_.shape[0]} columns, got {X.shape[1]}")
        filled = np.where(np.isnan(X), self.mean_, X)
        kept = self.keep_
        return (filled[:, kept] - self.mean_[kept]) / self.sd_[kept]

    def to_dict(self) -> dict:
        return {"mean": self.mean_.tolist(), "sd": self.sd_.tolist(),
                "keep": [bool(v) for v in self.keep_],
                "dropped": list(self.dropped_), "warnings": list(self.warnings_)}

    @classmethod
    def from_dict(cls, payload: dict) -> "Scaler":
        return cls(mean_=np.asarray(payload["mean"], dtype=float),
                   sd_=np.asarray(payload["sd"], dtype=float),
                   keep_=np.asarray(payload["keep"], dtype=bool),
                   dropped_=list(payload["dropped"]),
                   warnings_=list(payload["warnings"]))


def fit_scaler(X) -> Scaler:
    """Fit per-column mean/sd on X (NaN marks null).

    Nulls are imputed with the column mean over non-null entries before the
    moments are estimated (sd uses n-1). Columns that are entirely null or
    have zero variance cannot be standardized; they are dropped and recorded.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InputError("fit_scaler needs a 2-D matrix with at least 2 rows")
    n, d = X.shape
    mean = np.zeros(d)
    sd = np.ones(d)
    keep = np.ones(d, dtype=bool)
    dropped: list[int] = []
    warnings: list[str] = []
    for j in range(d):
        col = X[:, j]
        finite = col[~np.isnan(col)]
        if finite.size == 0:
            keep[j] = False
            dropped.append(j)
            warnings.append(f"column {j}: all values null, dropped")
            continue
        m = float(finite.mean())
        mean[j] = m
        filled = np.where(np.isnan(col), m, col)
        s = float(filled.std(ddof=1))
        if not np.isfinite(s) or s <= 1e-12 * max(1.0, abs(m)):
            keep[j] = False
            dropped.append(j)
            warnings.append(f"column {j}: zero variance, dropped")
            continue
        sd[j] = s
    if not keep.any():
        raise InputError("every column was dropped (all null or zero variance)")
    return Scaler(mean_=mean, sd_=sd, keep_=keep, dropped_=dropped, warnings_=warnings)
