"""Checkpoint accuracies, the normalized Omega_all metric and CSV reports."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .heads import DiscriminantModel, HeadConfig, build_head
from .stats import StatisticsAccumulator

__all__ = [
    "CheckpointResult",
    "EvaluationReport",
    "offline_reference",
    "omega_all",
    "restrict_to_classes",
    "topk_accuracy",
]

REPORT_COLUMNS = ("stream_offset", "classes_seen", "top1_accuracy", "topk_accuracy", "offline_accuracy")


def topk_accuracy(model: DiscriminantModel, X, y, k: int = 1) -> float:
    """Fraction of samples whose label is among the model's ``k`` best classes."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(y) == 0:
        raise ValueError("empty evaluation set")
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one label per row")
    top = model.predict_topk(X, k)
    return float(np.mean(np.any(top == y[:, None], axis=1)))


def omega_all(rho, rho_offline) -> float:
    """Mean ratio of streaming accuracy to offline accuracy across checkpoints."""
    rho = np.asarray(rho, dtype=np.float64)
    rho_offline = np.asarray(rho_offline, dtype=np.float64)
    if rho.shape != rho_offline.shape or rho.ndim != 1:
        raise ValueError(f"length mismatch: {rho.shape} vs {rho_offline.shape}")
    if rho.size == 0:
        raise ValueError("need at least one checkpoint")
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(rho_offline))):
        raise ValueError("accuracies must be finite; a checkpoint had no eval samples")
    if np.any(rho_offline <= 0):
        raise ValueError("offline accuracies must be positive")
    return float(np.mean(rho / rho_offline))


def restrict_to_classes(X, y, classes):
    """Rows of ``(X, y)`` whose label is in ``classes``."""
    y = np.asarray(y)
    mask = np.isin(y, np.asarray(list(classes)))
    return np.asarray(X)[mask], y[mask]


@dataclass(frozen=True)
class CheckpointResult:
    stream_offset: int
    classes_seen: int
    top1_accuracy: float
    topk_accuracy: float


@dataclass
class EvaluationReport:
    """Per-checkpoint accuracies of a streaming run.

    ``offline_reference`` holds one reference accuracy per checkpoint (same
    metric as ``topk_accuracy``); ``omega_all`` is filled in when it is set.
    """

    checkpoints: list[CheckpointResult] = field(default_factory=list)
    top_k: int = 5
    offline_reference: list[float] | None = None
    omega_all: float | None = None

    def __post_init__(self):
        offsets = [c.stream_offset for c in self.checkpoints]
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("checkpoint offsets must be strictly increasing")
        if self.omega_all is not None and self.offline_reference is None:
            raise ValueError("omega_all requires offline_reference")

    @property
    def top1(self) -> list[float]:
        return [c.top1_accuracy for c in self.checkpoints]

    @property
    def topk(self) -> list[float]:
        return [c.topk_accuracy for c in self.checkpoints]

    def with_offline(self, reference) -> "EvaluationReport":
        reference = [float(r) for r in reference]
        return replace(self, offline_reference=reference, omega_all=omega_all(self.topk, reference))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS if self.offline_reference else REPORT_COLUMNS[:-1])
        for i, c in enumerate(self.checkpoints):
            row = [c.stream_offset, c.classes_seen, repr(c.top1_accuracy), repr(c.topk_accuracy)]
            if self.offline_reference:
                row.append(repr(self.offline_reference[i]))
            w.writerow(row)
        return buf.getvalue()

    def summary(self) -> str:
        last = self.checkpoints[-1] if self.checkpoints else None
        parts = [f"checkpoints={len(self.checkpoints)}"]
        if last is not None:
            parts.append(f"final_top1={last.top1_accuracy:.6f}")
            parts.append(f"final_top{self.top_k}={last.topk_accuracy:.6f}")
        if self.omega_all is not None:
            parts.append(f"omega_all={self.omega_all:.6f}")
        return " ".join(parts)


def offline_reference(X_train, y_train, X_eval, y_eval, head_config: HeadConfig, class_sets,
                      k: int | None = None) -> list[float]:
    """Batch-fit reference accuracy for each checkpoint's class set.

    For every class set, all training data of those classes is fit into a
    fresh accumulator and the resulting head is scored on the evaluation
    samples of the same classes.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train)
    if len(y_train) == 0 or len(y_eval) == 0:
        raise ValueError("train and eval sets must be non-empty")
    k = head_config.top_k if k is None else k
    out = []
    for classes in class_sets:
        Xc, yc = restrict_to_classes(X_train, y_train, classes)
        acc = StatisticsAccumulator(X_train.shape[1]).fit(Xc, yc)
        model = build_head(acc, head_config)
        Xe, ye = restrict_to_classes(X_eval, y_eval, classes)
        out.append(topk_accuracy(model, Xe, ye, k))
    return out
