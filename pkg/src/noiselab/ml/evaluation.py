"""Train/test splitting and accuracy metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Metrics:
    accuracy: float
    confusion: np.ndarray  # rows: true label, columns: predicted label

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "confusion": self.confusion.tolist(), "count": self.total}


def confusion_matrix(y_true, y_pred) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    return np.bincount(2 * y_true + y_pred, minlength=4).reshape(2, 2)


def evaluate(model, X, y) -> Metrics:
    """Accuracy and confusion of ``model.predict`` on ``(X, y)``.

    An empty evaluation set has accuracy NaN.
    """
    y = np.asarray(y, dtype=np.int64)
    pred = model.predict(X) if len(y) else np.empty(0, dtype=np.int64)
    conf = confusion_matrix(y, pred)
    acc = float(np.trace(conf) / conf.sum()) if conf.sum() else float("nan")
    return Metrics(acc, conf)


def train_test_split(y, ratio: float = 0.7, seed: int = 0):
    """Stratified split of row indices.

    Each label keeps ``floor(ratio * count)`` rows for training, the rest go
    to test. Both index arrays are sorted.
    """
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must lie in [0, 1]")
    train, test = [], []
    for label in np.unique(y):
        idx = np.flatnonzero(y == label)
        perm = np.random.default_rng([seed, int(label)]).permutation(idx)
        cut = int(np.floor(ratio * len(idx)))
        train.append(perm[:cut])
        test.append(perm[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
