"""Frozen Gaussian discriminant heads built from streaming statistics.

A head blends every class covariance with the pooled covariance,

    blended_k = alpha * class_cov_k + (1 - alpha) * pooled_cov,

shrinks the blend toward the identity with ``epsilon`` and stores its inverse
and log-determinant. ``alpha = 0`` gives the streaming LDA head (one shared
covariance), ``alpha = 1`` the streaming QDA head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .stats import StatisticsAccumulator

__all__ = ["HeadConfig", "DiscriminantModel", "build_head"]

DEFAULT_EPSILON = 1e-4
LOGDET_MODES = ("regularized", "raw")


@dataclass(frozen=True)
class HeadConfig:
    """Hyperparameters of a discriminant head.

    Attributes
    ----------
    alpha : float
        Blend between pooled (0) and per-class (1) covariance.
    epsilon : float
        Identity shrinkage applied before inversion, in ``(0, 1]``.
    top_k : int
        Rank used for top-k predictions and accuracies.
    logdet : {"regularized", "raw"}
        Whether the log-determinant term uses the shrunk covariance (default,
        consistent with the stored inverse) or the unshrunk blend.
    """

    alpha: float = 0.0
    epsilon: float = DEFAULT_EPSILON
    top_k: int = 5
    logdet: str = "regularized"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if int(self.top_k) < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.logdet not in LOGDET_MODES:
            raise ValueError(f"logdet must be one of {LOGDET_MODES}, got {self.logdet!r}")

    def replace(self, **changes) -> "HeadConfig":
        fields = dict(alpha=self.alpha, epsilon=self.epsilon, top_k=self.top_k, logdet=self.logdet)
        fields.update(changes)
        return HeadConfig(**fields)


def _invert_spd(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse and log-determinant of a symmetric positive-definite matrix."""
    if not np.all(np.isfinite(m)):
        raise np.linalg.LinAlgError("matrix has non-finite entries")
    factor = linalg.cho_factor(m, lower=True)
    inv = linalg.cho_solve(factor, np.eye(m.shape[0]))
    inv = 0.5 * (inv + inv.T)
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return inv, logdet


def _raw_logdet(m: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0:
        raise np.linalg.LinAlgError("blended covariance is singular; use logdet='regularized'")
    return float(logdet)


class DiscriminantModel:
    """Immutable snapshot of a discriminant head.

    Attributes
    ----------
    classes : ndarray of int, shape (K,)
        Seen class ids, ascending.
    means : ndarray, shape (K, d)
    precisions : ndarray, shape (K, d, d)
        Regularized inverse covariances. For ``alpha == 0`` all K entries are
        views of one shared matrix.
    log_dets : ndarray, shape (K,)
    log_priors : ndarray, shape (K,)
    config : HeadConfig
    """

    def __init__(self, classes, means, precisions, log_dets, log_priors, config: HeadConfig):
        self.classes = np.asarray(classes, dtype=np.int64)
        self.means = np.asarray(means, dtype=np.float64)
        self.precisions = np.asarray(precisions, dtype=np.float64)
        self.log_dets = np.asarray(log_dets, dtype=np.float64)
        self.log_priors = np.asarray(log_priors, dtype=np.float64)
        self.config = config
        self.shared = bool(config.alpha == 0.0)
        for arr in (self.classes, self.means, self.precisions, self.log_dets, self.log_priors):
            arr.flags.writeable = False

    @property
    def dimension(self) -> int:
        return self.means.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def _check(self, X) -> tuple[np.ndarray, bool]:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise ValueError(f"expected {self.dimension} features, got shape {np.shape(X)}")
        if not np.all(np.isfinite(X)):
            raise ValueError("input contains non-finite values")
        return X, single

    def score(self, X) -> np.ndarray:
        """Discriminant value of every class, up to a class-independent constant.

        ``X`` may be one vector (returns shape ``(K,)``) or a batch
        ``(n, d)`` (returns ``(n, K)``). Columns follow ``self.classes``.
        """
        X, single = self._check(X)
        n, K = X.shape[0], self.n_classes
        maha = np.empty((n, K))
        for j in range(K):
            diff = X - self.means[j]
            maha[:, j] = np.sum((diff @ self.precisions[j]) * diff, axis=1)
        gamma = -0.5 * self.log_dets - 0.5 * maha + self.log_priors
        return gamma[0] if single else gamma

    def predict(self, X):
        """Class id with the largest discriminant; ties go to the smallest id."""
        gamma = self.score(X)
        return self.classes[np.argmax(gamma, axis=-1)]

    def predict_topk(self, X, k: int | None = None) -> np.ndarray:
        """The ``k`` best class ids per input, best first.

        ``k`` defaults to ``config.top_k`` and is clipped to the number of
        seen classes.
        """
        k = self.config.top_k if k is None else int(k)
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        gamma = self.score(X)
        order = np.argsort(-gamma, axis=-1, kind="stable")
        return self.classes[order[..., :k]]

    def predict_proba(self, X) -> np.ndarray:
        """Softmax of :meth:`score` over the seen classes."""
        gamma = self.score(X)
        gamma = gamma - gamma.max(axis=-1, keepdims=True)
        p = np.exp(gamma)
        return p / p.sum(axis=-1, keepdims=True)

    def __repr__(self) -> str:
        c = self.config
        return (
            f"DiscriminantModel(classes={self.n_classes}, d={self.dimension}, "
            f"alpha={c.alpha}, epsilon={c.epsilon})"
        )


def build_head(acc: StatisticsAccumulator, config: HeadConfig | None = None, classes=None) -> DiscriminantModel:
    """Freeze the accumulator into a :class:`DiscriminantModel`.

    Parameters
    ----------
    acc : StatisticsAccumulator
    config : HeadConfig, optional
    classes : iterable of int, optional
        Restrict the head to these seen classes. Priors are renormalized over
        the retained classes; the pooled covariance is used as accumulated.
    """
    config = HeadConfig() if config is None else config
    if acc.total_count == 0 or len(acc) == 0:
        raise ValueError("cannot build a head from an empty accumulator")
    if classes is None:
        ids = acc.classes
    else:
        ids = sorted({int(k) for k in classes})
        missing = [k for k in ids if k not in acc]
        if missing:
            raise ValueError(f"classes never seen: {missing}")
        if not ids:
            raise ValueError("empty class selection")

    alpha, eps = config.alpha, config.epsilon
    d = acc.dimension
    eye = np.eye(d)
    counts = np.array([acc[k].count for k in ids], dtype=np.float64)
    log_priors = np.log(counts) - np.log(counts.sum())
    means = np.stack([acc[k].mean for k in ids])

    if alpha == 0.0:
        blended = acc.pooled_cov
        inv, logdet = _invert_spd((1.0 - eps) * blended + eps * eye)
        if config.logdet == "raw":
            logdet = _raw_logdet(blended)
        precisions = np.broadcast_to(inv, (len(ids), d, d))
        log_dets = np.full(len(ids), logdet)
    else:
        precisions = np.empty((len(ids), d, d))
        log_dets = np.empty(len(ids))
        for j, k in enumerate(ids):
            blended = alpha * acc[k].class_cov + (1.0 - alpha) * acc.pooled_cov
            try:
                precisions[j], log_dets[j] = _invert_spd((1.0 - eps) * blended + eps * eye)
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(f"class {k}: {exc}") from exc
            if config.logdet == "raw":
                log_dets[j] = _raw_logdet(blended)

    return DiscriminantModel(ids, means, precisions, log_dets, log_priors, config)
