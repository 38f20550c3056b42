"""Multimodal deception detection: per-modality classifiers over frames,
audio, and transcripts, fused by voting, with a deterministic experiment
harness."""

__version__ = "0.1.0"

from .dataset_registry import DatasetConfig, DatasetTag, Label, SplitPlan, VideoRecord
from .errors import (ComponentError, ConfigError, ContractError, DataError,
                     DDPError, NumericError)
from .experiment import ExperimentConfig, ExperimentRunner, load_config, run_experiment
from .fusion import FusedVerdict, FusionMode, Modality, ModalityVerdict
from .metrics import Metrics, evaluate
from .synthetic import generate_synthetic_corpus

__all__ = [
    "DatasetConfig", "DatasetTag", "Label", "SplitPlan", "VideoRecord",
    "ComponentError", "ConfigError", "ContractError", "DataError", "DDPError",
    "NumericError",
    "ExperimentConfig", "ExperimentRunner", "load_config", "run_experiment",
    "FusedVerdict", "FusionMode", "Modality", "ModalityVerdict",
    "Metrics", "evaluate",
    "generate_synthetic_corpus",
    "__version__",
]
