"""Block statistics of QBER corpora and the labelled classification dataset."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

FEATURE_NAMES = ("mean", "median", "mode", "std", "skewness", "kurtosis", "auc")


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class HistogramSpec:
    bin_count: int = 10
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.bin_count < 1:
            raise FeatureError(f"bin_count must be >= 1, got {self.bin_count}")
        if not self.lo < self.hi:
            raise FeatureError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bin_count

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.bin_count) + 0.5) * self.width


@dataclass(frozen=True)
class BlockingConfig:
    block_count: int = 50
    block_size: int = 4000
    shuffle_rounds: int = 100
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.block_count < 1 or self.block_size < 2:
            raise FeatureError("need block_count >= 1 and block_size >= 2")
        if self.shuffle_rounds < 1:
            raise FeatureError(f"shuffle_rounds must be >= 1, got {self.shuffle_rounds}")


def bin_index(values, spec: HistogramSpec = HistogramSpec()) -> np.ndarray:
    """Bin of each value; bin ``i`` is ``[lo + i*w, lo + (i+1)*w)``, last bin closed."""
    x = np.asarray(values, dtype=float)
    if np.any(x < spec.lo) or np.any(x > spec.hi) or np.any(np.isnan(x)):
        raise FeatureError(f"values must lie in [{spec.lo}, {spec.hi}]")
    w = spec.width
    idx = np.floor((x - spec.lo) / w).astype(np.int64)
    # floor of the quotient can be off by one against the exact edges lo + i*w
    idx -= x < spec.lo + idx * w
    idx += x >= spec.lo + (idx + 1) * w
    return np.clip(idx, 0, spec.bin_count - 1)


def histogram(values, spec: HistogramSpec = HistogramSpec()) -> np.ndarray:
    """Bin counts along the last axis of ``values``."""
    x = np.asarray(values, dtype=float)
    if x.size == 0 or x.shape[-1] == 0:
        raise FeatureError("cannot histogram an empty block")
    idx = bin_index(x, spec)
    flat = idx.reshape(-1, x.shape[-1])
    offs = np.arange(flat.shape[0])[:, None] * spec.bin_count
    counts = np.bincount((flat + offs).ravel(), minlength=flat.shape[0] * spec.bin_count)
    return counts.reshape(x.shape[:-1] + (spec.bin_count,))


def block_features(blocks, spec: HistogramSpec = HistogramSpec()) -> np.ndarray:
    """Seven features for each row of ``blocks`` (shape ``(B, n)`` or ``(n,)``).

    Moments are population moments of the raw values; skewness is
    ``m3 / m2**1.5`` and kurtosis is the excess ``m4 / m2**2 - 3``, both 0 for
    a constant block. Mode is the centre of the fullest bin (lowest index on
    ties) and auc is ``sum(counts) * bin_width``.
    """
    x = np.asarray(blocks, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] < 2:
        raise FeatureError("a block needs at least 2 values")
    mean = x.mean(axis=-1)
    dev = x - mean[:, None]
    m2 = np.mean(dev**2, axis=-1)
    m3 = np.mean(dev**3, axis=-1)
    m4 = np.mean(dev**4, axis=-1)
    constant = np.ptp(x, axis=-1) == 0
    safe = np.where(constant, 1.0, m2)
    skew = np.where(constant, 0.0, m3 / safe**1.5)
    kurt = np.where(constant, 0.0, m4 / safe**2 - 3.0)
    std = np.where(constant, 0.0, np.sqrt(m2))
    counts = histogram(x, spec)
    mode = spec.centers[np.argmax(counts, axis=-1)]
    auc = counts.sum(axis=-1) * spec.width
    out = np.column_stack([mean, np.median(x, axis=-1), mode, std, skew, kurt, auc])
    return out[0] if single else out


@dataclass(frozen=True)
class FeatureVector:
    mean: float
    median: float
    mode: float
    std: float
    skewness: float
    kurtosis: float
    auc: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES])


def extract_features(block, spec: HistogramSpec = HistogramSpec()) -> FeatureVector:
    return FeatureVector(*block_features(np.asarray(block, dtype=float).ravel(), spec).tolist())


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple = FEATURE_NAMES

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(-1, len(self.feature_names))
        self.y = np.asarray(self.y, dtype=np.int64)
        if len(self.X) != len(self.y):
            raise FeatureError("X and y lengths differ")

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.X[idx], self.y[idx], self.feature_names)

    def label_counts(self) -> dict:
        labels, counts = np.unique(self.y, return_counts=True)
        return dict(zip(labels.tolist(), counts.tolist()))


def shuffle_permutation(n: int, shuffle_seed: int, round_index: int, stream: int) -> np.ndarray:
    """Permutation for one shuffle round; round 0 keeps the original order."""
    if round_index == 0:
        return np.arange(n)
    return np.random.default_rng([shuffle_seed, round_index, stream]).permutation(n)


def block_rows(values, cfg: BlockingConfig, spec: HistogramSpec, stream: int) -> np.ndarray:
    """Feature rows for every shuffle round, shape ``(rounds, m, 7)``."""
    values = np.asarray(values, dtype=float)
    m, n = cfg.block_count, cfg.block_size
    if m * n > len(values):
        raise FeatureError(f"need {m}*{n}={m * n} values, corpus has {len(values)}")
    out = np.empty((cfg.shuffle_rounds, m, len(FEATURE_NAMES)))
    for r in range(cfg.shuffle_rounds):
        perm = shuffle_permutation(len(values), cfg.shuffle_seed, r, stream)
        out[r] = block_features(values[perm[: m * n]].reshape(m, n), spec)
    return out


def build_dataset(corpus_a, corpus_b, cfg: BlockingConfig, spec: HistogramSpec = HistogramSpec()) -> LabeledDataset:
    """Label corpus A as 0 and corpus B as 1; rows ordered by (round, block, label)."""
    a = getattr(corpus_a, "values", corpus_a)
    b = getattr(corpus_b, "values", corpus_b)
    rows_a = block_rows(a, cfg, spec, stream=0)
    rows_b = block_rows(b, cfg, spec, stream=1)
    X = np.stack([rows_a, rows_b], axis=2).reshape(-1, len(FEATURE_NAMES))
    y = np.tile([0, 1], cfg.shuffle_rounds * cfg.block_count)
    return LabeledDataset(X, y)


def average_histogram_tips(values, cfg: BlockingConfig, spec: HistogramSpec = HistogramSpec()):
    """Mean and standard error of per-block bin counts over the unshuffled blocking."""
    values = np.asarray(values, dtype=float)
    m, n = cfg.block_count, cfg.block_size
    if m * n > len(values):
        raise FeatureError(f"need {m * n} values, corpus has {len(values)}")
    counts = histogram(values[: m * n].reshape(m, n), spec).astype(float)
    sem = counts.std(axis=0, ddof=1) / np.sqrt(m) if m > 1 else np.zeros(spec.bin_count)
    return counts.mean(axis=0), sem


DATASET_HEADER = "mean,median,mode,std,skewness,kurtosis,auc,label"


def write_dataset(ds: LabeledDataset, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(DATASET_HEADER + "\n")
        for row, label in zip(ds.X.tolist(), ds.y.tolist()):
            fh.write(",".join(f"{v:.17g}" for v in row) + f",{label}\n")
    return path


def read_dataset(path) -> LabeledDataset:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
        if header != DATASET_HEADER:
            raise FeatureError(f"{path}: unexpected header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return LabeledDataset(np.empty((0, 7)), np.empty(0))
    if data.shape[1] != 8:
        raise FeatureError(f"{path}: expected 8 columns, got {data.shape[1]}")
    labels = data[:, -1]
    if not np.all(np.isin(labels, (0, 1))):
        raise FeatureError(f"{path}: labels must be 0 or 1")
    return LabeledDataset(data[:, :7], labels.astype(np.int64))
