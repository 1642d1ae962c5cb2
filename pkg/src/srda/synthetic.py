"""Seeded Gaussian class-conditional data for desk-scale experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SyntheticParams", "generate_synthetic", "random_spd"]


@dataclass(frozen=True)
class SyntheticParams:
    """Generating parameters, enough to build the exact Bayes classifier."""

    means: np.ndarray  # (C, d)
    covariances: np.ndarray  # (C, d, d)
    seed: int

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    @property
    def dimension(self) -> int:
        return self.means.shape[1]

    def sample(self, samples_per_class: int, rng: np.random.Generator):
        """Draw ``samples_per_class`` points per class, grouped by class."""
        d = self.dimension
        X = np.empty((self.n_classes * samples_per_class, d))
        y = np.repeat(np.arange(self.n_classes), samples_per_class)
        for k in range(self.n_classes):
            L = np.linalg.cholesky(self.covariances[k])
            z = rng.standard_normal((samples_per_class, d))
            X[k * samples_per_class:(k + 1) * samples_per_class] = self.means[k] + z @ L.T
        return X, y


def random_spd(dimension: int, condition: float, rng: np.random.Generator) -> np.ndarray:
    """Random SPD matrix with condition number exactly ``condition``.

    Eigenvalues are spread log-uniformly between the extremes, which are
    pinned, then rescaled to unit geometric mean; eigenvectors are a Haar
    random rotation.
    """
    if condition < 1:
        raise ValueError(f"condition must be >= 1, got {condition}")
    if dimension == 1 or condition == 1:
        return np.eye(dimension)
    u = rng.uniform(size=dimension)
    u[0], u[1] = 0.0, 1.0
    log_eig = u * np.log(condition)
    log_eig -= log_eig.mean()
    q, r = np.linalg.qr(rng.standard_normal((dimension, dimension)))
    q = q * np.sign(np.diag(r))
    cov = (q * np.exp(log_eig)) @ q.T
    return 0.5 * (cov + cov.T)


def generate_synthetic(
    class_count: int,
    dimension: int,
    samples_per_class: int,
    heteroscedasticity: float = 1.0,
    seed: int = 0,
    radius: float = 3.0,
):
    """Gaussian classes with heterogeneous covariances.

    Each class mean is drawn uniformly on the sphere of ``radius``. Each class
    covariance has condition number ``heteroscedasticity ** u`` with ``u``
    uniform on [0, 1], so ``heteroscedasticity = 1`` gives identity
    covariances for every class (the setting where LDA is Bayes optimal).

    Returns
    -------
    X : ndarray, shape (class_count * samples_per_class, dimension)
    y : ndarray of int
    params : SyntheticParams
    """
    for name, value in (("class_count", class_count), ("dimension", dimension),
                        ("samples_per_class", samples_per_class)):
        if int(value) < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
    if heteroscedasticity < 1:
        raise ValueError(f"heteroscedasticity must be >= 1, got {heteroscedasticity}")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")

    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((class_count, dimension))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    means = radius * directions / np.where(norms == 0, 1.0, norms)
    covs = np.stack([
        random_spd(dimension, heteroscedasticity ** rng.uniform(), rng)
        for _ in range(class_count)
    ])
    params = SyntheticParams(means=means, covariances=covs, seed=seed)
    X, y = params.sample(samples_per_class, rng)
    return X, y, params
