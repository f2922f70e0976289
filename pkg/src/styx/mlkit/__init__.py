"""Small deterministic learning stack: scaling, PCA, five classifiers, stacking."""

from .linear import LinearSvm, LogregConfig, SoftmaxRegression, SvmConfig
from .mlp import MlpClassifier, MlpConfig
from .pca import PcaModel, fit_pca
from .scaler import Scaler, fit_scaler
from .serialize import (FORMAT_VERSION, MAGIC, ChecksumError, ModelFileError,
                        VersionError, load_model, model_from_dict,
                        model_to_dict, save_model)
from .stacking import (LEARNER_KINDS, EvalReport, StackConfig, StackedModel,
                       evaluate, fit_base, fit_stacked, predict_stacked,
                       stack_inputs, stratified_folds)
from .trees import (ForestConfig, GbtConfig, GradientBoostingClassifier,
                    RandomForestClassifier)

__all__ = [
    "ChecksumError", "EvalReport", "FORMAT_VERSION", "ForestConfig",
    "GbtConfig", "GradientBoostingClassifier", "LEARNER_KINDS", "LinearSvm",
    "LogregConfig", "MAGIC", "MlpClassifier", "MlpConfig", "ModelFileError",
    "PcaModel", "RandomForestClassifier", "Scaler", "SoftmaxRegression",
    "StackConfig", "StackedModel", "SvmConfig", "VersionError", "evaluate",
    "fit_base", "fit_pca", "fit_scaler", "fit_stacked", "load_model",
    "model_from_dict", "model_to_dict", "predict_stacked", "save_model",
    "stack_inputs", "stratified_folds",
]
