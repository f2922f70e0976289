"""Single-file model container.

Layout: 4-byte magic "STYX", big-endian uint32 format version, 32-byte SHA-256
of the payload, then the payload itself (compact UTF-8 JSON). The checksum is
verified before any JSON parsing, so truncated or bit-flipped files fail fast.
Floats round-trip exactly through JSON (shortest-repr), so a loaded model
reproduces the saved model's predictions bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import asdict

import numpy as np

from ..corpus import AgeGroup
from ..errors import InputError
from .linear import LogregConfig, SvmConfig
from .mlp import MlpConfig
from .pca import PcaModel
from .scaler import Scaler
from .stacking import LEARNER_CLASSES, StackConfig, StackedModel
from .trees import ForestConfig, GbtConfig, GradientBoostingClassifier

MAGIC = b"STYX"
FORMAT_VERSION = 1
_HEADER = struct.Struct(">I")


class ModelFileError(InputError):
    """File is not a readable model container."""


class ChecksumError(ModelFileError):
    """Payload bytes do not match the stored digest."""


class VersionError(ModelFileError):
    """Container format version is not supported by this build."""


_CONFIG_CLASSES = {
    "logreg": LogregConfig,
    "forest": ForestConfig,
    "gbt": GbtConfig,
    "svm": SvmConfig,
    "mlp": MlpConfig,
    "meta": GbtConfig,
}


def _config_to_dict(cfg: StackConfig) -> dict:
    out = {"pca_components": cfg.pca_components}
    for name in _CONFIG_CLASSES:
        out[name] = asdict(getattr(cfg, name))
    return out


def _config_from_dict(obj: dict) -> StackConfig:
    kwargs = {"pca_components": int(obj["pca_components"])}
    for name, cls in _CONFIG_CLASSES.items():
        kwargs[name] = cls(**obj[name])
    return StackConfig(**kwargs)


def model_to_dict(model: StackedModel) -> dict:
    return {
        "kind": "stacked",
        "labels": [g.value for g in model.labels],
        "seed": model.seed,
        "folds": model.folds,
        "fold_assign": [int(v) for v in model.fold_assign],
        "catalog": list(model.catalog),
        "catalog_hash": model.catalog_hash,
        "pca_components": model.pca_components,
        "config": _config_to_dict(model.config),
        "scaler": model.scaler.to_dict(),
        "pca": model.pca.to_dict(),
        "base_models": [{"kind": kind, "model": m.to_dict()}
                        for kind, m in model.base_models],
        "meta": model.meta.to_dict(),
    }


def model_from_dict(obj: dict) -> StackedModel:
    if obj.get("kind") != "stacked":
        raise ModelFileError(f"unsupported model kind {obj.get('kind')!r}")
    base_models = []
    for entry in obj["base_models"]:
        kind = entry["kind"]
        try:
            cls = LEARNER_CLASSES[kind]
        except KeyError:
            raise ModelFileError(f"unknown base learner kind {kind!r}") from None
        base_models.append((kind, cls.from_dict(entry["model"])))
    return StackedModel(
        scaler=Scaler.from_dict(obj["scaler"]),
        pca=PcaModel.from_dict(obj["pca"]),
        base_models=base_models,
        meta=GradientBoostingClassifier.from_dict(obj["meta"]),
        labels=tuple(AgeGroup(v) for v in obj["labels"]),
        seed=int(obj["seed"]),
        folds=int(obj["folds"]),
        fold_assign=np.asarray(obj["fold_assign"], dtype=int),
        catalog=tuple(obj["catalog"]),
        catalog_hash=obj["catalog_hash"],
        pca_components=int(obj["pca_components"]),
        config=_config_from_dict(obj["config"]),
    )


def save_model(model: StackedModel, path) -> None:
    payload = json.dumps(model_to_dict(model), separators=(",", ":"),
                         sort_keys=True).encode("utf-8")
    blob = MAGIC + _HEADER.pack(FORMAT_VERSION) + hashlib.sha256(payload).digest() + payload
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load_model(path) -> StackedModel:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        raise ModelFileError(f"model file not found: {path}") from None
    if len(blob) < len(MAGIC) + _HEADER.size + 32:
        raise ModelFileError(f"{path}: file too short to be a model container")
    if blob[:4] != MAGIC:
        raise ModelFileError(f"{path}: bad magic {blob[:4]!r}")
    (version,) = _HEADER.unpack(blob[4:8])
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: format version {version} not supported "
                           f"(expected {FORMAT_VERSION})")
    digest, payload = blob[8:40], blob[40:]
    if hashlib.sha256(payload).digest() != digest:
        raise ChecksumError(f"{path}: payload checksum mismatch")
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"{path}: payload is not valid JSON: {exc}") from exc
    return model_from_dict(obj)
