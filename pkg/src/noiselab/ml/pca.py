"""Principal component analysis on z-scored features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCALE_FLOOR = 1e-12


@dataclass
class PcaModel:
    feature_means: np.ndarray
    feature_scales: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance_ratio: np.ndarray  # (d,), all eigen-directions

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def standardize(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_means):
            raise ValueError(
                f"expected {len(self.feature_means)} columns, got shape {X.shape}"
            )
        return (X - self.feature_means) / self.feature_scales

    def transform(self, X) -> np.ndarray:
        return self.standardize(X) @ self.components.T

    def inverse_transform(self, Y) -> np.ndarray:
        return (np.asarray(Y) @ self.components) * self.feature_scales + self.feature_means


def fit_pca(X, n_components: int | None = None, variance_threshold: float | None = None) -> PcaModel:
    """Fit PCA keeping ``n_components`` directions, or the fewest whose
    cumulative explained variance reaches ``variance_threshold``.

    Columns with zero variance get a scale of ``1e-12`` instead of failing.
    Each component is signed so that its largest-magnitude loading is positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < X.shape[1]:
        raise ValueError(f"need at least as many rows as columns, got {X.shape}")
    if (n_components is None) == (variance_threshold is None):
        raise ValueError("give exactly one of n_components or variance_threshold")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale < SCALE_FLOOR, SCALE_FLOOR, scale)
    Z = (X - mean) / scale
    cov = Z.T @ Z / len(Z)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order].T
    pivot = np.argmax(np.abs(evecs), axis=1)
    evecs *= np.sign(evecs[np.arange(len(evecs)), pivot])[:, None]
    total = evals.sum()
    ratio = evals / total if total > 0 else np.zeros_like(evals)
    if variance_threshold is not None:
        if not 0 < variance_threshold <= 1:
            raise ValueError("variance_threshold must lie in (0, 1]")
        k = int(np.searchsorted(np.cumsum(ratio), variance_threshold - 1e-12) + 1)
        k = min(k, X.shape[1])
    else:
        k = int(n_components)
        if not 1 <= k <= X.shape[1]:
            raise ValueError(f"n_components must be in [1, {X.shape[1]}]")
    return PcaModel(mean, scale, evecs[:k].copy(), ratio)


def pca_transform(model: PcaModel, X) -> np.ndarray:
    return model.transform(X)
