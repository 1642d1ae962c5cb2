"""Class-incremental stream plans and the single-pass training driver."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .evaluation import CheckpointResult, EvaluationReport, restrict_to_classes, topk_accuracy
from .heads import HeadConfig, build_head
from .stats import StatisticsAccumulator

__all__ = [
    "ScenarioConfig",
    "StreamError",
    "StreamPlan",
    "make_plan",
    "run_stream",
]

log = logging.getLogger(__name__)

ORDERING_MODES = ("class_incremental", "iid")
PLAN_MAGIC = "# srda-plan v1"


class StreamError(RuntimeError):
    """Failure while streaming, tagged with the offending stream offset."""

    def __init__(self, offset: int, index: int, cause: Exception):
        super().__init__(f"stream offset {offset} (sample index {index}): {cause}")
        self.offset = offset
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class ScenarioConfig:
    base_class_count: int = 0
    class_order_seed: int = 0
    within_class_shuffle_seed: int = 0
    increment_size: int = 1
    ordering_mode: str = "class_incremental"

    def __post_init__(self):
        if self.base_class_count < 0:
            raise ValueError(f"base_class_count must be >= 0, got {self.base_class_count}")
        if self.increment_size < 1:
            raise ValueError(f"increment_size must be >= 1, got {self.increment_size}")
        if self.ordering_mode not in ORDERING_MODES:
            raise ValueError(f"ordering_mode must be one of {ORDERING_MODES}, got {self.ordering_mode!r}")


@dataclass(frozen=True)
class StreamPlan:
    """Sample order plus the stream offsets at which evaluation fires.

    A checkpoint at offset ``o`` is evaluated after the first ``o`` samples
    of ``order`` have been fit.
    """

    order: np.ndarray
    checkpoints: tuple[int, ...]
    class_order: tuple[int, ...] = ()
    ordering_mode: str = "class_incremental"

    def __post_init__(self):
        object.__setattr__(self, "order", np.asarray(self.order, dtype=np.int64))
        object.__setattr__(self, "checkpoints", tuple(int(c) for c in self.checkpoints))
        object.__setattr__(self, "class_order", tuple(int(c) for c in self.class_order))
        cps = self.checkpoints
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        if cps and (cps[0] < 0 or cps[-1] > len(self.order)):
            raise ValueError("checkpoint offset outside the stream")

    def __len__(self) -> int:
        return len(self.order)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StreamPlan):
            return NotImplemented
        return (np.array_equal(self.order, other.order) and self.checkpoints == other.checkpoints
                and self.class_order == other.class_order and self.ordering_mode == other.ordering_mode)

    def class_sets(self, labels) -> list[list[int]]:
        """Classes seen by each checkpoint, given the dataset labels."""
        labels = np.asarray(labels)
        return [np.unique(labels[self.order[:cp]]).tolist() for cp in self.checkpoints]

    def to_text(self) -> str:
        """Replayable manifest: header lines, then one sample index per line."""
        lines = [
            PLAN_MAGIC,
            f"# ordering_mode: {self.ordering_mode}",
            "# checkpoints: " + " ".join(map(str, self.checkpoints)),
            "# class_order: " + " ".join(map(str, self.class_order)),
        ]
        lines.extend(str(i) for i in self.order.tolist())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StreamPlan":
        lines = text.splitlines()
        if not lines or lines[0].strip() != PLAN_MAGIC:
            raise ValueError("not a stream plan manifest")
        header, order = {}, []
        for line in lines[1:]:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                header[key.strip()] = value.split()
            else:
                order.append(int(line))
        return cls(
            order=np.array(order, dtype=np.int64),
            checkpoints=tuple(int(v) for v in header.get("checkpoints", [])),
            class_order=tuple(int(v) for v in header.get("class_order", [])),
            ordering_mode=(header.get("ordering_mode") or ["class_incremental"])[0],
        )


def make_plan(labels, config: ScenarioConfig | None = None) -> StreamPlan:
    """Order a labeled dataset into a class-incremental (or iid) stream.

    Classes are permuted with ``class_order_seed``; the first
    ``base_class_count`` of them form the base phase. Samples within a class
    are shuffled with ``within_class_shuffle_seed``. Checkpoints fire after
    the base phase (if non-empty), after every ``increment_size`` further
    classes, and at the end of the stream.
    """
    config = ScenarioConfig() if config is None else config
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("labels must be non-empty")
    classes = np.unique(labels)
    if config.base_class_count > len(classes):
        raise ValueError(
            f"base_class_count={config.base_class_count} exceeds the {len(classes)} classes present"
        )

    class_order = np.random.default_rng(config.class_order_seed).permutation(classes)
    shuffle_rng = np.random.default_rng(config.within_class_shuffle_seed)
    blocks = []
    for c in class_order:
        idx = np.flatnonzero(labels == c)
        blocks.append(idx[shuffle_rng.permutation(len(idx))])

    sizes = np.cumsum([len(b) for b in blocks])
    base = config.base_class_count
    checkpoints = []
    if base > 0:
        checkpoints.append(int(sizes[base - 1]))
    for end in range(base + config.increment_size, len(classes), config.increment_size):
        checkpoints.append(int(sizes[end - 1]))
    checkpoints.append(int(sizes[-1]))
    checkpoints = sorted(set(checkpoints))

    order = np.concatenate(blocks)
    if config.ordering_mode == "iid":
        n_base = int(sizes[base - 1]) if base > 0 else 0
        rest = order[n_base:]
        iid_rng = np.random.default_rng([config.within_class_shuffle_seed, 1])
        order = np.concatenate([order[:n_base], rest[iid_rng.permutation(len(rest))]])

    return StreamPlan(order=order, checkpoints=tuple(checkpoints),
                      class_order=tuple(class_order.tolist()), ordering_mode=config.ordering_mode)


def run_stream(X, y, plan: StreamPlan, head_config: HeadConfig | None = None, X_eval=None, y_eval=None,
               *, seen_classes_only: bool = True, accumulator: StatisticsAccumulator | None = None):
    """Fit the stream one sample at a time, evaluating at every checkpoint.

    Parameters
    ----------
    X, y : array-like
        Training features and labels; ``plan.order`` indexes into them.
    plan : StreamPlan
    head_config : HeadConfig, optional
    X_eval, y_eval : array-like, optional
        Evaluation set. Without one, checkpoints are skipped and the report
        is empty.
    seen_classes_only : bool
        Evaluate each checkpoint on eval samples of classes seen so far
        (default). When False, all eval samples count and unseen classes
        are necessarily misclassified.
    accumulator : StatisticsAccumulator, optional
        Continue from an existing accumulator instead of a fresh one.

    Returns
    -------
    report : EvaluationReport
    accumulator : StatisticsAccumulator
    """
    head_config = HeadConfig() if head_config is None else head_config
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(plan.order) and (plan.order.min() < 0 or plan.order.max() >= len(y)):
        raise ValueError("plan indexes samples outside the dataset")
    acc = StatisticsAccumulator(X.shape[1]) if accumulator is None else accumulator
    evaluate = X_eval is not None and y_eval is not None
    if evaluate:
        X_eval = np.asarray(X_eval, dtype=np.float64)
        y_eval = np.asarray(y_eval)

    results = []
    pos = 0
    started = time.perf_counter()
    for cp in plan.checkpoints:
        while pos < cp:
            i = int(plan.order[pos])
            try:
                acc.fit_one(X[i], y[i])
            except (ValueError, np.linalg.LinAlgError) as exc:
                raise StreamError(pos, i, exc) from exc
            pos += 1
        if evaluate and cp > 0:
            results.append(_evaluate_checkpoint(acc, head_config, X_eval, y_eval, cp, seen_classes_only))
    for pos in range(pos, len(plan.order)):
        i = int(plan.order[pos])
        try:
            acc.fit_one(X[i], y[i])
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise StreamError(pos, i, exc) from exc

    elapsed = time.perf_counter() - started
    if len(plan.order):
        log.info("streamed %d samples in %.3fs (%.1f samples/s)", len(plan.order), elapsed,
                 len(plan.order) / max(elapsed, 1e-12))
    return EvaluationReport(results, top_k=head_config.top_k), acc


def _evaluate_checkpoint(acc, head_config, X_eval, y_eval, offset, seen_classes_only):
    seen = acc.classes
    try:
        model = build_head(acc, head_config)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise StreamError(offset, -1, exc) from exc
    if seen_classes_only:
        Xe, ye = restrict_to_classes(X_eval, y_eval, seen)
    else:
        Xe, ye = X_eval, y_eval
    if len(ye) == 0:
        top1 = topk = float("nan")
    else:
        top1 = topk_accuracy(model, Xe, ye, 1)
        topk = topk_accuracy(model, Xe, ye, head_config.top_k)
    return CheckpointResult(offset, len(seen), top1, topk)
