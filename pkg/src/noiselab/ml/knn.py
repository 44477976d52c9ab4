"""Brute-force k-nearest-neighbour classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

QUERY_CHUNK = 256


@dataclass
class KnnModel:
    k: int
    train_points: np.ndarray
    train_labels: np.ndarray

    def neighbours(self, Q) -> np.ndarray:
        """Indices of the ``k`` nearest training points per query, nearest first.

        Equal distances are ordered by training index.
        """
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        X = self.train_points
        if Q.shape[1] != X.shape[1]:
            raise ValueError(f"query has {Q.shape[1]} features, model has {X.shape[1]}")
        k = self.k
        out = np.empty((len(Q), k), dtype=np.int64)
        for start in range(0, len(Q), QUERY_CHUNK):
            q = Q[start : start + QUERY_CHUNK]
            d = np.zeros((len(q), len(X)))
            for j in range(X.shape[1]):
                d += (q[:, j, None] - X[None, :, j]) ** 2
            if k < len(X):
                kth = np.partition(d, k - 1, axis=1)[:, k - 1]
                cand = d <= kth[:, None]
            else:
                cand = np.ones_like(d, dtype=bool)
            for r in range(len(q)):
                idx = np.flatnonzero(cand[r])
                order = np.argsort(d[r, idx], kind="stable")
                out[start + r] = idx[order[:k]]
        return out

    def predict(self, Q) -> np.ndarray:
        nb = self.neighbours(Q)
        labels = self.train_labels[nb]
        ones = labels.sum(axis=1)
        pred = np.where(2 * ones > self.k, 1, 0)
        tie = 2 * ones == self.k
        return np.where(tie, labels[:, 0], pred).astype(np.int64)


def fit_knn(X, y, k: int = 2) -> KnnModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("empty training set")
    if not 1 <= k <= len(X):
        raise ValueError(f"k must be in [1, {len(X)}], got {k}")
    return KnnModel(int(k), X.copy(), y.copy())


def knn_predict(model: KnnModel, Q) -> np.ndarray:
    return model.predict(Q)
