"""Gaussian naive Bayes for two classes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VAR_SMOOTHING = 1e-9


@dataclass
class GnbModel:
    class_priors: np.ndarray  # (2,)
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d)

    def joint_log_likelihood(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[1] != self.means.shape[1]:
            raise ValueError(f"query has {Q.shape[1]} features, model has {self.means.shape[1]}")
        diff = Q[:, None, :] - self.means[None]
        ll = -0.5 * np.sum(np.log(2 * np.pi * self.variances)[None] + diff**2 / self.variances[None], axis=2)
        return ll + np.log(self.class_priors)[None]

    def predict_log_proba(self, Q) -> np.ndarray:
        jll = self.joint_log_likelihood(Q)
        top = jll.max(axis=1, keepdims=True)
        return jll - (top + np.log(np.exp(jll - top).sum(axis=1, keepdims=True)))

    def predict(self, Q) -> np.ndarray:
        # argmax returns the first maximum, so exact ties go to class 0
        return np.argmax(self.joint_log_likelihood(Q), axis=1).astype(np.int64)


def fit_gnb(X, y) -> GnbModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise ValueError("GNB needs both classes in the training data")
    eps = VAR_SMOOTHING * np.max(X.var(axis=0))
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    means = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.stack([X[y == c].var(axis=0) for c in (0, 1)]) + eps
    if eps == 0:
        variances = np.where(variances > 0, variances, np.finfo(float).tiny)
    return GnbModel(priors, means, variances)


def gnb_predict(model: GnbModel, Q) -> np.ndarray:
    return model.predict(Q)
