"""Streaming sufficient statistics for Gaussian discriminant heads.

One :class:`StatisticsAccumulator` holds, for every class seen so far, the
sample count, the running mean and the running (biased) class covariance,
plus a pooled within-class covariance shared by all classes. Everything is
updated one sample at a time; nothing about past samples is retained.

The class covariance follows the rank-1 recursion

    cov <- (n * cov + n / (n + 1) * outer(z - mu, z - mu)) / (n + 1)

with ``n`` the number of samples of that class seen before ``z`` and ``mu``
the class mean before ``z``. The pooled covariance uses the same rank-1 term
but is averaged over the global sample counter, so it always equals the
count-weighted average of the class covariances.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "ClassStatistics",
    "LabeledSample",
    "StatisticsAccumulator",
    "new_accumulator",
]

COUNTER_MODES = ("class", "global")


@dataclass(frozen=True)
class LabeledSample:
    """A feature vector with its integer class label."""

    features: np.ndarray
    label: int

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain non-finite values")
        if int(self.label) < 0:
            raise ValueError(f"label must be non-negative, got {self.label}")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "label", int(self.label))


@dataclass
class ClassStatistics:
    """Count, running mean and running covariance of a single class."""

    class_id: int
    count: int
    mean: np.ndarray
    class_cov: np.ndarray

    @classmethod
    def empty(cls, class_id: int, dimension: int) -> "ClassStatistics":
        return cls(
            class_id=class_id,
            count=0,
            mean=np.zeros(dimension),
            class_cov=np.zeros((dimension, dimension)),
        )


def _symmetrize(m: np.ndarray) -> None:
    m[...] = 0.5 * (m + m.T)


class StatisticsAccumulator:
    """Per-class and pooled streaming statistics.

    Parameters
    ----------
    dimension : int
        Feature dimension ``d``.
    max_classes : int or None
        Upper bound on class labels (labels must lie in ``[0, max_classes)``).
        ``None`` means unbounded; classes are allocated on first sight either
        way.
    counter : {"class", "global"}
        Which counter weights the rank-1 terms. ``"class"`` (default) uses the
        per-class count and yields exact empirical covariances. ``"global"``
        plugs the global sample index into both recursions, the literal
        reading of the original SLDA-style update; it is order dependent and
        cannot be merged.
    """

    def __init__(self, dimension: int, max_classes: int | None = None, counter: str = "class"):
        if int(dimension) < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        if max_classes is not None and int(max_classes) < 1:
            raise ValueError(f"max_classes must be >= 1 or None, got {max_classes}")
        if counter not in COUNTER_MODES:
            raise ValueError(f"counter must be one of {COUNTER_MODES}, got {counter!r}")
        self.dimension = int(dimension)
        self.max_classes = None if max_classes is None else int(max_classes)
        self.counter = counter
        self.total_count = 0
        self.pooled_cov = np.zeros((self.dimension, self.dimension))
        self._classes: dict[int, ClassStatistics] = {}

    # -- queries ---------------------------------------------------------

    @property
    def classes(self) -> list[int]:
        """Seen class ids in ascending order."""
        return sorted(self._classes)

    def __contains__(self, class_id) -> bool:
        return int(class_id) in self._classes

    def __getitem__(self, class_id) -> ClassStatistics:
        return self._classes[int(class_id)]

    def __len__(self) -> int:
        return len(self._classes)

    def counts(self) -> dict[int, int]:
        return {k: self._classes[k].count for k in self.classes}

    def class_prior(self, class_id) -> float:
        """Fraction of all samples seen so far that belong to ``class_id``.

        Unseen classes get prior 0.
        """
        if self.total_count == 0:
            raise ValueError("class prior undefined: no samples seen")
        stats = self._classes.get(int(class_id))
        if stats is None:
            return 0.0
        return stats.count / self.total_count

    def priors(self) -> dict[int, float]:
        return {k: self.class_prior(k) for k in self.classes}

    # -- updates ---------------------------------------------------------

    def _check_label(self, label: int) -> int:
        label = int(label)
        if label < 0:
            raise ValueError(f"label must be non-negative, got {label}")
        if self.max_classes is not None and label >= self.max_classes:
            raise ValueError(f"label {label} exceeds max_classes={self.max_classes}")
        return label

    def fit_one(self, features, label) -> "StatisticsAccumulator":
        """Absorb one sample. Returns ``self`` for chaining."""
        z = np.asarray(features, dtype=np.float64).reshape(-1)
        if z.shape[0] != self.dimension:
            raise ValueError(f"expected {self.dimension} features, got {z.shape[0]}")
        if not np.all(np.isfinite(z)):
            raise ValueError("features contain non-finite values")
        label = self._check_label(label)

        stats = self._classes.get(label)
        if stats is None:
            stats = ClassStatistics.empty(label, self.dimension)
            self._classes[label] = stats

        n = stats.count
        t = self.total_count
        delta = z - stats.mean
        scatter = np.outer(delta, delta)

        # pooled first, then class covariance, both against the pre-update mean
        w = t if self.counter == "global" else n
        rank1 = (w / (w + 1.0)) * scatter
        self.pooled_cov = (t * self.pooled_cov + rank1) / (t + 1.0)
        _symmetrize(self.pooled_cov)

        m = t if self.counter == "global" else n
        stats.class_cov = (m * stats.class_cov + (m / (m + 1.0)) * scatter) / (m + 1.0)
        _symmetrize(stats.class_cov)

        stats.mean = (n * stats.mean + z) / (n + 1.0)
        stats.count = n + 1
        self.total_count = t + 1
        return self

    def fit(self, X, y) -> "StatisticsAccumulator":
        """Stream the rows of ``X`` through :meth:`fit_one` in order."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2 or len(X) != len(y):
            raise ValueError("X must be 2-D with one label per row")
        for x, label in zip(X, y):
            self.fit_one(x, label)
        return self

    def fit_samples(self, samples: Iterable[LabeledSample]) -> "StatisticsAccumulator":
        for s in samples:
            self.fit_one(s.features, s.label)
        return self

    def copy(self) -> "StatisticsAccumulator":
        return copy.deepcopy(self)

    def merge(self, other: "StatisticsAccumulator") -> "StatisticsAccumulator":
        """Combine two accumulators built on disjoint data into a new one.

        Uses the pairwise (Chan et al.) combination of means and scatter
        matrices, so the result matches streaming the concatenated data up to
        round-off.
        """
        if other.dimension != self.dimension:
            raise ValueError(
                f"dimension mismatch: {self.dimension} vs {other.dimension}"
            )
        if "global" in (self.counter, other.counter):
            raise ValueError("accumulators using the global counter cannot be merged")
        if self.max_classes is None or other.max_classes is None:
            max_classes = None
        else:
            max_classes = max(self.max_classes, other.max_classes)

        out = StatisticsAccumulator(self.dimension, max_classes)
        total = self.total_count + other.total_count
        out.total_count = total
        if total == 0:
            return out

        pooled_scatter = self.total_count * self.pooled_cov + other.total_count * other.pooled_cov
        for k in sorted(set(self._classes) | set(other._classes)):
            a = self._classes.get(k)
            b = other._classes.get(k)
            if a is None or b is None:
                src = a if a is not None else b
                out._classes[k] = ClassStatistics(
                    k, src.count, src.mean.copy(), src.class_cov.copy()
                )
                continue
            n = a.count + b.count
            delta = b.mean - a.mean
            cross = (a.count * b.count / n) * np.outer(delta, delta)
            scatter = a.count * a.class_cov + b.count * b.class_cov + cross
            mean = a.mean + delta * (b.count / n)
            cov = scatter / n
            _symmetrize(cov)
            out._classes[k] = ClassStatistics(k, n, mean, cov)
            pooled_scatter = pooled_scatter + cross

        out.pooled_cov = pooled_scatter / total
        _symmetrize(out.pooled_cov)
        return out

    __or__ = merge

    def __repr__(self) -> str:
        return (
            f"StatisticsAccumulator(dimension={self.dimension}, "
            f"classes={len(self._classes)}, total_count={self.total_count})"
        )


def new_accumulator(dimension: int, max_classes: int | None = None, counter: str = "class") -> StatisticsAccumulator:
    """Create an empty accumulator for ``dimension``-dimensional features."""
    return StatisticsAccumulator(dimension, max_classes, counter)
