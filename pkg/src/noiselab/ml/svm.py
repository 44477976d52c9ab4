"""Soft-margin SVM trained by sequential minimal optimisation.

The solver follows the second-order working-set selection of Fan, Chen and
Lin (JMLR 2005), the scheme used by LIBSVM. Labels ``{0, 1}`` map to
``{-1, +1}``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

TAU = 1e-12
FULL_KERNEL_MAX = 4000
ROW_CACHE_BYTES = 256 * 2**20


class ConvergenceError(RuntimeError):
    """SMO hit its iteration cap; ``model`` holds the partial solution."""

    def __init__(self, message, model=None):
        super().__init__(message)
        self.model = model


@dataclass(frozen=True)
class Kernel:
    kind: str = "rbf"  # linear | rbf | poly
    gamma: float = 1.0
    degree: int = 4
    coef0: float = 1.0

    def __call__(self, A, B) -> np.ndarray:
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        if self.kind == "linear":
            return A @ B.T
        if self.kind == "poly":
            return (self.gamma * (A @ B.T) + self.coef0) ** self.degree
        if self.kind == "rbf":
            sq = np.zeros((len(A), len(B)))
            for j in range(A.shape[1]):
                sq += (A[:, j, None] - B[None, :, j]) ** 2
            return np.exp(-self.gamma * sq)
        raise ValueError(f"unknown kernel {self.kind!r}")

    def diag(self, A) -> np.ndarray:
        A = np.atleast_2d(A)
        if self.kind == "rbf":
            return np.ones(len(A))
        if self.kind == "linear":
            return np.einsum("ij,ij->i", A, A)
        return (self.gamma * np.einsum("ij,ij->i", A, A) + self.coef0) ** self.degree


def default_gamma(X) -> float:
    """``1 / (n_features * Var(X))``, the variance taken over all entries."""
    X = np.asarray(X, dtype=float)
    var = X.var()
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


@dataclass
class SvmModel:
    kernel: Kernel
    C: float
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for each support vector
    bias: float
    n_iter: int = 0
    converged: bool = True
    alpha: np.ndarray | None = field(default=None, repr=False)

    def decision_function(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if len(self.support_vectors) == 0:
            return np.full(len(Q), self.bias)
        out = np.empty(len(Q))
        for s in range(0, len(Q), 1024):
            out[s : s + 1024] = self.kernel(Q[s : s + 1024], self.support_vectors) @ self.dual_coef
        return out + self.bias

    def predict(self, Q) -> np.ndarray:
        return (self.decision_function(Q) >= 0).astype(np.int64)


class _KernelRows:
    def __init__(self, X, kernel: Kernel):
        self.X = X
        self.kernel = kernel
        self.full = kernel(X, X) if len(X) <= FULL_KERNEL_MAX else None
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self.max_rows = max(2, ROW_CACHE_BYTES // (8 * len(X)))

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        r = self.cache.get(i)
        if r is None:
            r = self.kernel(self.X[i], self.X)[0]
            self.cache[i] = r
            if len(self.cache) > self.max_rows:
                self.cache.popitem(last=False)
        else:
            self.cache.move_to_end(i)
        return r


def _select(G, alpha, y, C, QD, rows, tol):
    """Return the working pair ``(i, j)``, or ``None`` once the gap is below ``tol``."""
    minus_yG = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    if not up.any() or not low.any():
        return None
    cand = np.where(up, minus_yG, -np.inf)
    i = int(np.argmax(cand))
    gmax = cand[i]
    gmin = np.min(np.where(low, minus_yG, np.inf))
    if gmax - gmin < tol:
        return None
    Ki = rows.row(i)
    b = gmax - minus_yG
    ok = low & (b > 0)
    a = QD[i] + QD - 2.0 * Ki
    a = np.where(a > 0, a, TAU)
    obj = np.where(ok, -(b * b) / a, np.inf)
    j = int(np.argmin(obj))
    if not np.isfinite(obj[j]):
        return None
    return i, j


def _bias(G, alpha, y, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(np.mean(yG[free]))
    else:
        at_ub = alpha >= C
        at_lb = alpha <= 0
        ub_set = (at_ub & (y < 0)) | (at_lb & (y > 0))
        lb_set = (at_ub & (y > 0)) | (at_lb & (y < 0))
        ub = np.min(yG[ub_set]) if ub_set.any() else np.inf
        lb = np.max(yG[lb_set]) if lb_set.any() else -np.inf
        rho = 0.5 * (ub + lb)
    return -rho


def fit_svm(X, y, kernel: Kernel | str = "rbf", C: float = 1.0, tol: float = 1e-3, max_iter: int | None = None) -> SvmModel:
    """Train a binary soft-margin SVM.

    ``kernel`` may be a :class:`Kernel` or one of ``"linear"``, ``"rbf"``,
    ``"poly"``; for a string, ``gamma`` defaults to :func:`default_gamma`.

    Raises
    ------
    ConvergenceError
        When ``max_iter`` (default ``max(100_000, 100 * n)``) is exhausted.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(y, dtype=np.int64)
    if not (np.any(labels == 0) and np.any(labels == 1)):
        raise ValueError("SVM needs both classes in the training data")
    if C <= 0:
        raise ValueError("C must be positive")
    if isinstance(kernel, str):
        kernel = Kernel(kernel, gamma=default_gamma(X))
    n = len(X)
    ys = np.where(labels == 1, 1.0, -1.0)
    alpha = np.zeros(n)
    G = -np.ones(n)
    QD = kernel.diag(X)
    rows = _KernelRows(X, kernel)
    max_iter = max_iter or max(100_000, 100 * n)

    it = 0
    converged = False
    while it < max_iter:
        pair = _select(G, alpha, ys, C, QD, rows, tol)
        if pair is None:
            converged = True
            break
        i, j = pair
        it += 1
        Ki, Kj = rows.row(i), rows.row(j)
        ai, aj = alpha[i], alpha[j]
        if ys[i] != ys[j]:
            quad = QD[i] + QD[j] - 2.0 * Ki[j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Ki[j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        alpha[i], alpha[j] = ni, nj
        # Q_it = y_i y_t K_it
        G += ys * (ys[i] * (ni - ai) * Ki + ys[j] * (nj - aj) * Kj)

    bias = _bias(G, alpha, ys, C)
    sv = alpha > 0
    model = SvmModel(kernel, float(C), X[sv].copy(), (alpha * ys)[sv], bias, it, converged, alpha.copy())
    if not converged:
        raise ConvergenceError(f"SMO did not converge in {max_iter} iterations", model)
    return model


def svm_predict(model: SvmModel, Q) -> np.ndarray:
    return model.predict(Q)


def kkt_violation(model: SvmModel, X, y) -> float:
    """Largest KKT violation of the training problem (0 at an exact optimum)."""
    X = np.asarray(X, dtype=float)
    ys = np.where(np.asarray(y) == 1, 1.0, -1.0)
    alpha = model.alpha
    margin = ys * model.decision_function(X)
    C = model.C
    v = np.where(alpha <= 0, np.maximum(0.0, 1.0 - margin), 0.0)
    v = np.where(alpha >= C, np.maximum(0.0, margin - 1.0), v)
    free = (alpha > 0) & (alpha < C)
    v = np.where(free, np.abs(margin - 1.0), v)
    return float(v.max())
