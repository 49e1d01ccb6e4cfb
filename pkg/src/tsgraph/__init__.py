"""Vibration time series -> entropy-windowed similarity graphs -> attention classifier.

The pipeline in one line: segment each labeled sample with the window
size that maximizes normalized per-segment entropy, connect segments
whose DTW similarity clears a threshold, and classify the resulting
graph with a multi-head attention network feeding an LSTM head. All
training runs on the bundled reverse-mode differentiation core.
"""

__version__ = "0.1.0"

from .config import RunConfig, load_config
from .dtw import dtw_distance, dtw_distance_banded, pairwise_similarity, similarity
from .entropy import optimal_window, optimal_window_dataset, shannon_entropy
from .errors import (
    ConfigError,
    DataError,
    FormatError,
    InfeasibleBandError,
    InsufficientDataError,
    ShapeError,
    StateError,
)
from .graph import SimilarityGraph, ThresholdPolicy, load_graph, sample_to_graph, save_graph
from .metrics import EvalReport, confusion_matrix, precision_recall_f1, roc_auc_macro
from .model import Model, ModelConfig, load_checkpoint, save_checkpoint
from .signal import (
    DatasetManifest,
    LabeledSample,
    SignalRecording,
    generate_synthetic_dataset,
    load_manifest,
    load_recording,
    make_samples,
)
from .stats import ks_two_sample, welch_t_test
from .training import FoldPlan, TrainSettings, cross_eval, evaluate, kfold_plan, train

__all__ = [
    "__version__",
    "RunConfig",
    "load_config",
    "dtw_distance",
    "dtw_distance_banded",
    "pairwise_similarity",
    "similarity",
    "optimal_window",
    "optimal_window_dataset",
    "shannon_entropy",
    "ConfigError",
    "DataError",
    "FormatError",
    "InfeasibleBandError",
    "InsufficientDataError",
    "ShapeError",
    "StateError",
    "SimilarityGraph",
    "ThresholdPolicy",
    "load_graph",
    "sample_to_graph",
    "save_graph",
    "EvalReport",
    "confusion_matrix",
    "precision_recall_f1",
    "roc_auc_macro",
    "Model",
    "ModelConfig",
    "load_checkpoint",
    "save_checkpoint",
    "DatasetManifest",
    "LabeledSample",
    "SignalRecording",
    "generate_synthetic_dataset",
    "load_manifest",
    "load_recording",
    "make_samples",
    "ks_two_sample",
    "welch_t_test",
    "FoldPlan",
    "TrainSettings",
    "cross_eval",
    "evaluate",
    "kfold_plan",
    "train",
]
