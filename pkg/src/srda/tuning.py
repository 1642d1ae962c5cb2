"""Post-training alpha selection from one frozen accumulator.

The class and pooled covariances are accumulated independently, so a head at
any alpha can be rebuilt after training without touching the data again.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from .evaluation import topk_accuracy
from .heads import DEFAULT_EPSILON, HeadConfig, build_head
from .stats import StatisticsAccumulator

__all__ = ["AlphaGrid", "TuningError", "TuningResult", "balanced_holdout", "grid_search_alpha"]

log = logging.getLogger(__name__)


class TuningError(RuntimeError):
    def __init__(self, alpha: float, cause: Exception):
        super().__init__(f"alpha={alpha!r}: {cause}")
        self.alpha = alpha
        self.cause = cause


@dataclass(frozen=True)
class AlphaGrid:
    """Sorted, deduplicated alpha values in [0, 1] including both endpoints."""

    values: tuple[float, ...] = tuple(round(0.05 * i, 2) for i in range(21))
    metric: str = "top1"
    k: int = 5

    def __post_init__(self):
        vals = tuple(sorted({float(v) for v in self.values}))
        if not vals:
            raise ValueError("alpha grid is empty")
        if vals[0] < 0.0 or vals[-1] > 1.0:
            raise ValueError("alpha grid values must lie in [0, 1]")
        if vals[0] != 0.0 or vals[-1] != 1.0:
            raise ValueError("alpha grid must contain 0 and 1")
        if self.metric not in ("top1", "topk"):
            raise ValueError(f"metric must be 'top1' or 'topk', got {self.metric!r}")
        if int(self.k) < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, step: float = 0.05, **kwargs) -> "AlphaGrid":
        n = int(round(1.0 / step))
        if n < 1 or not np.isclose(n * step, 1.0):
            raise ValueError(f"step must divide 1 evenly, got {step}")
        return cls(tuple(i / n for i in range(n + 1)), **kwargs)

    @property
    def rank(self) -> int:
        return 1 if self.metric == "top1" else self.k


@dataclass(frozen=True)
class TuningResult:
    alphas: tuple[float, ...]
    accuracies: tuple[float, ...]
    best_alpha: float
    best_accuracy: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("alpha", "accuracy"))
        for a, acc in zip(self.alphas, self.accuracies):
            w.writerow((repr(a), repr(acc)))
        return buf.getvalue()


def grid_search_alpha(acc: StatisticsAccumulator, X_val, y_val, grid: AlphaGrid | None = None,
                      epsilon: float = DEFAULT_EPSILON) -> TuningResult:
    """Evaluate a head at every alpha of ``grid`` on a validation set.

    The accumulator is only read. Ties for the best accuracy resolve to the
    smallest alpha.
    """
    grid = AlphaGrid() if grid is None else grid
    y_val = np.asarray(y_val)
    if len(y_val) == 0:
        raise ValueError("empty validation set")
    accuracies = []
    for alpha in grid.values:
        try:
            model = build_head(acc, HeadConfig(alpha=alpha, epsilon=epsilon, top_k=grid.rank))
            accuracies.append(topk_accuracy(model, X_val, y_val, grid.rank))
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise TuningError(alpha, exc) from exc
    best = int(np.argmax(accuracies))
    return TuningResult(grid.values, tuple(accuracies), grid.values[best], accuracies[best])


def balanced_holdout(labels, per_class_budget: int, seed: int = 0):
    """Reserve up to ``per_class_budget`` stream positions per class.

    Runs an independent reservoir sample (Algorithm R) over each class's
    positions in stream order, seeded per class from ``(seed, class_id)``.

    Parameters
    ----------
    labels : array-like of int
        Labels in stream order.
    per_class_budget : int
    seed : int

    Returns
    -------
    holdout : ndarray of int
        Reserved positions, ascending.
    remaining : ndarray of int
        All other positions, in stream order.
    """
    if int(per_class_budget) < 1:
        raise ValueError(f"per_class_budget must be >= 1, got {per_class_budget}")
    budget = int(per_class_budget)
    labels = np.asarray(labels)
    keep = np.zeros(len(labels), dtype=bool)
    for c in np.unique(labels):
        positions = np.flatnonzero(labels == c)
        n = len(positions)
        if n <= budget:
            if n < budget:
                log.info("class %s has only %d samples for a holdout budget of %d", c, n, budget)
            keep[positions] = True
            continue
        rng = np.random.default_rng([int(seed), int(c)])
        reservoir = np.arange(budget)
        # slot drawn for item i is uniform on [0, i]; only slots < budget replace
        slots = rng.integers(0, np.arange(budget, n) + 1)
        for offset in np.flatnonzero(slots < budget):
            reservoir[slots[offset]] = budget + offset
        keep[positions[reservoir]] = True
    return np.flatnonzero(keep), np.flatnonzero(~keep)
