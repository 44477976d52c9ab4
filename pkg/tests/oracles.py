"""Independent brute-force references used by the classifier tests."""

import itertools
import math

import numpy as np


def svm_dual_by_enumeration(K, y, C, tol=1e-9):
    """Solve the soft-margin dual exactly by trying every active set.

    Each sample is at the lower bound, at the upper bound or free; for every
    assignment the KKT equalities are solved and the first fully consistent
    solution with the best dual objective is returned as
    ``(objective, alpha, b_lo, b_hi)``; ``[b_lo, b_hi]`` is the set of
    biases consistent with the KKT conditions (a single point whenever a
    free support vector exists). ``y`` holds +-1 labels.
    """
    n = len(y)
    best = None
    for states in itertools.product("LUF", repeat=n):
        free = [i for i, s in enumerate(states) if s == "F"]
        alpha = np.array([C if s == "U" else 0.0 for s in states])
        # unknowns: alpha_free..., b
        m = len(free)
        A = np.zeros((m + 1, m + 1))
        rhs = np.zeros(m + 1)
        for r, i in enumerate(free):
            for c, j in enumerate(free):
                A[r, c] = y[i] * y[j] * K[i, j]
            A[r, m] = y[i]
            rhs[r] = 1.0 - sum(y[i] * y[j] * K[i, j] * alpha[j] for j in range(n) if states[j] == "U")
        for c, j in enumerate(free):
            A[m, c] = y[j]
        rhs[m] = -sum(y[j] * alpha[j] for j in range(n) if states[j] == "U")
        if m:
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            alpha[free] = sol[:m]
            b = sol[m]
        else:
            if abs(rhs[m]) > tol:
                continue
            lo, hi = _bias_interval(K, y, alpha, C, 0.0, free)
            if lo > hi + 1e-7:
                continue
            b = 0.5 * (lo + hi)
        if np.any(alpha < -tol) or np.any(alpha > C + tol):
            continue
        margin = y * (K @ (alpha * y) + b)
        ok = all(
            (s == "L" and margin[i] >= 1 - 1e-7) or (s == "U" and margin[i] <= 1 + 1e-7) or s == "F"
            for i, s in enumerate(states)
        )
        if not ok:
            continue
        obj = alpha.sum() - 0.5 * (alpha * y) @ K @ (alpha * y)
        if best is None or obj > best[0] + 1e-12:
            best = (obj, alpha.copy(), *_bias_interval(K, y, alpha, C, b, free))
    return best


def _bias_interval(K, y, alpha, C, b, free, tol=1e-9):
    if free:
        return b, b
    f = K @ (alpha * y)
    lo, hi = -np.inf, np.inf
    for i in range(len(y)):
        # y_i (f_i + b) >= 1 at the lower bound, <= 1 at the upper bound
        edge = y[i] - f[i]
        at_upper = alpha[i] >= C - tol
        if (y[i] > 0) != at_upper:
            lo = max(lo, edge)
        else:
            hi = min(hi, edge)
    return lo, hi


def gnb_log_posterior(X, y, q, smoothing=1e-9):
    """Plain-loop Gaussian naive Bayes joint log likelihood for query ``q``."""
    d = len(X[0])
    cols = [[row[j] for row in X] for j in range(d)]

    def var(v):
        mu = sum(v) / len(v)
        return sum((x - mu) ** 2 for x in v) / len(v)

    eps = smoothing * max(var(c) for c in cols)
    out = []
    for c in (0, 1):
        rows = [r for r, lab in zip(X, y) if lab == c]
        total = math.log(len(rows) / len(X))
        for j in range(d):
            v = [r[j] for r in rows]
            mu = sum(v) / len(v)
            s2 = var(v) + eps
            total += -0.5 * math.log(2 * math.pi * s2) - (q[j] - mu) ** 2 / (2 * s2)
        out.append(total)
    return out


def knn_by_enumeration(X, y, q, k):
    """Majority of the k nearest (distance, index)-sorted points; ties -> nearest."""
    order = sorted(range(len(X)), key=lambda i: (sum((a - b) ** 2 for a, b in zip(X[i], q)), i))[:k]
    ones = sum(y[i] for i in order)
    if 2 * ones == k:
        return y[order[0]]
    return int(2 * ones > k)
