"""Streaming regularized discriminant analysis on fixed feature vectors."""

__version__ = "0.1.0"

from .evaluation import EvaluationReport, offline_reference, omega_all, topk_accuracy
from .heads import DiscriminantModel, HeadConfig, build_head
from .io import load_checkpoint, load_features, memory_report, save_checkpoint, save_features
from .protocol import ScenarioConfig, StreamError, StreamPlan, make_plan, run_stream
from .stats import ClassStatistics, LabeledSample, StatisticsAccumulator, new_accumulator
from .synthetic import generate_synthetic
from .tuning import AlphaGrid, TuningResult, balanced_holdout, grid_search_alpha

__all__ = [
    "AlphaGrid",
    "ClassStatistics",
    "DiscriminantModel",
    "EvaluationReport",
    "HeadConfig",
    "LabeledSample",
    "ScenarioConfig",
    "StatisticsAccumulator",
    "StreamError",
    "StreamPlan",
    "TuningResult",
    "balanced_holdout",
    "build_head",
    "generate_synthetic",
    "grid_search_alpha",
    "load_checkpoint",
    "load_features",
    "make_plan",
    "memory_report",
    "new_accumulator",
    "offline_reference",
    "omega_all",
    "run_stream",
    "save_checkpoint",
    "save_features",
    "topk_accuracy",
]
