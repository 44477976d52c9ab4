"""Stage functions: simulate -> featurize -> train -> evaluate.

Every stage reads and writes files under an output directory, so each can be
re-run on its own. File names inside the directory are fixed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .features import (
    FeatureError,
    LabeledDataset,
    average_histogram_tips,
    build_dataset,
    read_dataset,
    write_dataset,
)
from .ml import (
    ConvergenceError,
    Kernel,
    default_gamma,
    evaluate,
    fit_gnb,
    fit_knn,
    fit_pca,
    fit_svm,
    load_model,
    save_model,
    train_test_split,
)
from .qkd import QberCorpus, generate_corpus, read_corpus, write_corpus

log = logging.getLogger(__name__)

CORPUS_NAMES = ("corpus_0.csv", "corpus_1.csv")
DATASET = "dataset.csv"
DATASET_TRAIN = "dataset_train.csv"
DATASET_TEST = "dataset_test.csv"
TIPS = "histogram_tips.csv"
SPLIT = "split.json"
SCREE = "scree.csv"
PCA_MODEL = "model_pca.json"
TRAIN_REPORT = "train_report.json"
METRICS = "metrics.json"
REPORT = "run_report.json"
CONFIG_COPY = "config.json"


class StageError(RuntimeError):
    """A stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def corpus_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit seed for the ``index``-th corpus."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(path, header, rows, fmt="{:.17g}") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt.format(v) for v in row) + "\n")
    return path


# -- simulate ----------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig, out_dir) -> list[Path]:
    """Write one QBER corpus (CSV + JSON metadata) per noise kind."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, kind in enumerate(cfg.noise_pair):
        seed = corpus_seed(cfg.master_seed, i)
        log.info("simulating %d %s sessions (%s)", cfg.sessions_per_noise, kind, cfg.protocol)
        corpus = generate_corpus(cfg.session_config(kind), cfg.sessions_per_noise, seed)
        paths.append(write_corpus(corpus, out / CORPUS_NAMES[i])[0])
    return paths


# -- featurize ---------------------------------------------------------------


def _split_corpora(a: np.ndarray, b: np.ndarray, cfg: ExperimentConfig):
    """Leak-free variant: cut each corpus before any shuffling."""
    parts = []
    for values in (a, b):
        cut = int(np.floor(cfg.split_ratio * len(values)))
        parts.append((values[:cut], values[cut:]))
    m_train = max(1, int(np.floor(cfg.split_ratio * cfg.block_count)))
    m_test = max(1, cfg.block_count - m_train)
    return parts, m_train, m_test


def cmd_featurize(corpus_a, corpus_b, cfg: ExperimentConfig, out_dir) -> dict:
    """Build the labelled dataset and the averaged histogram tips."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ca = corpus_a if isinstance(corpus_a, QberCorpus) else read_corpus(corpus_a)
    cb = corpus_b if isinstance(corpus_b, QberCorpus) else read_corpus(corpus_b)
    spec = cfg.histogram
    written = {}
    if cfg.split_before_augment:
        ((tr_a, te_a), (tr_b, te_b)), m_train, m_test = _split_corpora(ca.values, cb.values, cfg)
        blk = cfg.blocking
        for name, m, va, vb in ((DATASET_TRAIN, m_train, tr_a, tr_b), (DATASET_TEST, m_test, te_a, te_b)):
            sub = type(blk)(m, blk.block_size, blk.shuffle_rounds, blk.shuffle_seed)
            written[name] = write_dataset(build_dataset(va, vb, sub, spec), out / name)
    else:
        ds = build_dataset(ca, cb, cfg.blocking, spec)
        written[DATASET] = write_dataset(ds, out / DATASET)
    tips = [average_histogram_tips(c.values, cfg.blocking, spec) for c in (ca, cb)]
    rows = [
        (spec.centers[i], tips[0][0][i], tips[0][1][i], tips[1][0][i], tips[1][1][i])
        for i in range(spec.bin_count)
    ]
    written[TIPS] = _write_csv(out / TIPS, ["bin_center", "mean_0", "sem_0", "mean_1", "sem_1"], rows)
    if cfg.render_figures:
        from .plotting import plot_histogram_tips

        fig = plot_histogram_tips(
            spec.centers,
            [tips[0][0], tips[1][0]],
            list(cfg.noise_pair),
            out / "figures" / "histogram_tips.png",
            sems=[tips[0][1], tips[1][1]],
        )
        written["histogram_tips.png"] = fig
    return written


# -- train -------------------------------------------------------------------


def load_split_datasets(cfg: ExperimentConfig, out_dir):
    """Return ``(train, test)`` datasets as the train stage sees them."""
    out = Path(out_dir)
    if cfg.split_before_augment:
        return read_dataset(out / DATASET_TRAIN), read_dataset(out / DATASET_TEST)
    ds = read_dataset(out / DATASET)
    split = json.loads((out / SPLIT).read_text()) if (out / SPLIT).exists() else None
    if split is None:
        tr, te = train_test_split(ds.y, cfg.split_ratio, cfg.master_seed)
    else:
        tr, te = np.array(split["train"], dtype=np.int64), np.array(split["test"], dtype=np.int64)
    return ds.subset(tr), ds.subset(te)


def _fit_classifier(name: str, Z, y, cfg: ExperimentConfig):
    if name == "knn":
        return fit_knn(Z, y, cfg.knn_k)
    if name == "gnb":
        return fit_gnb(Z, y)
    s = cfg.svm
    gamma = s.gamma if s.gamma is not None else default_gamma(Z)
    kernel = Kernel(s.kernel, gamma=gamma, degree=s.degree, coef0=s.coef0)
    return fit_svm(Z, y, kernel, C=s.C, tol=s.tol, max_iter=s.max_iter)


def cmd_train(dataset, cfg: ExperimentConfig, out_dir) -> dict:
    """Split, fit PCA on the training rows only, then fit each classifier."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.split_before_augment:
        train, _ = load_split_datasets(cfg, out)
    else:
        ds = dataset if isinstance(dataset, LabeledDataset) else read_dataset(dataset)
        if len(np.unique(ds.y)) < 2:
            raise FeatureError("dataset must contain both labels")
        tr, te = train_test_split(ds.y, cfg.split_ratio, cfg.master_seed)
        _write_json(out / SPLIT, {"seed": cfg.master_seed, "ratio": cfg.split_ratio, "train": tr.tolist(), "test": te.tolist()})
        train = ds.subset(tr)
    if len(np.unique(train.y)) < 2:
        raise FeatureError("training split must contain both labels")
    pca = fit_pca(train.X, cfg.pca_components, cfg.pca_variance_threshold)
    save_model(pca, out / PCA_MODEL)
    ratios = pca.explained_variance_ratio
    _write_csv(
        out / SCREE,
        ["component", "explained_variance_ratio", "cumulative"],
        [(str(i + 1), r, c) for i, (r, c) in enumerate(zip(ratios, np.cumsum(ratios)))],
    )
    Z = pca.transform(train.X)
    report = {"pca_components": pca.n_components, "explained_variance_ratio": ratios.tolist(), "classifiers": {}}
    for name in cfg.classifiers:
        entry = {}
        try:
            model = _fit_classifier(name, Z, train.y, cfg)
        except ConvergenceError as exc:
            log.warning("%s did not converge: %s", name, exc)
            model = exc.model
            entry["error"] = str(exc)
        save_model(model, out / f"model_{name}.json")
        entry["train_accuracy"] = evaluate(model, Z, train.y).accuracy
        report["classifiers"][name] = entry
    _write_json(out / TRAIN_REPORT, report)
    if cfg.render_figures:
        from .plotting import plot_scree

        plot_scree(ratios, out / "figures" / "scree.png")
    return report


# -- evaluate ----------------------------------------------------------------


def decision_grid(model, Z, resolution: int = 200, pad: float = 0.1):
    """Predicted labels on a ``resolution``-square grid over the first two PCs.

    Remaining components are held at 0 (the training mean).
    """
    lo = Z[:, :2].min(axis=0)
    hi = Z[:, :2].max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    lo, hi = lo - pad * span, hi + pad * span
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], resolution), np.linspace(lo[1], hi[1], resolution))
    pts = np.zeros((gx.size, Z.shape[1]))
    pts[:, 0] = gx.ravel()
    pts[:, 1] = gy.ravel()
    return gx, gy, model.predict(pts).reshape(gx.shape)


def cmd_evaluate(models_dir, dataset, cfg: ExperimentConfig, out_dir) -> dict:
    """Per-classifier train/test metrics plus decision-region plot data."""
    models_dir = Path(models_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.split_before_augment:
        train, test = load_split_datasets(cfg, models_dir)
    else:
        ds = dataset if isinstance(dataset, LabeledDataset) else read_dataset(dataset)
        split = json.loads((models_dir / SPLIT).read_text())
        train = ds.subset(np.array(split["train"], dtype=np.int64))
        test = ds.subset(np.array(split["test"], dtype=np.int64))
    pca = load_model(models_dir / PCA_MODEL)
    Ztr, Zte = pca.transform(train.X), pca.transform(test.X)
    if pca.n_components >= 2:
        _write_csv(
            out / "pca_points.csv",
            ["pc1", "pc2", "label", "split"],
            [(*z[:2], str(int(c)), "train") for z, c in zip(Ztr, train.y)]
            + [(*z[:2], str(int(c)), "test") for z, c in zip(Zte, test.y)],
        )
    metrics = {}
    for name in cfg.classifiers:
        path = models_dir / f"model_{name}.json"
        if not path.exists():
            continue
        model = load_model(path)
        m_tr = evaluate(model, Ztr, train.y)
        m_te = evaluate(model, Zte, test.y)
        metrics[name] = {
            "train_accuracy": m_tr.accuracy,
            "test_accuracy": m_te.accuracy,
            "confusion": m_te.confusion.tolist(),
            "train_confusion": m_tr.confusion.tolist(),
        }
        if pca.n_components >= 2:
            gx, gy, lab = decision_grid(model, Ztr, cfg.grid_resolution)
            _write_csv(
                out / f"decision_grid_{name}.csv",
                ["pc1", "pc2", "label"],
                ((x, y, str(int(v))) for x, y, v in zip(gx.ravel(), gy.ravel(), lab.ravel())),
            )
            if cfg.render_figures:
                from .plotting import plot_decision_regions

                for split_name, Zs, ys in (("train", Ztr, train.y), ("test", Zte, test.y)):
                    plot_decision_regions(
                        gx, gy, lab, Zs, ys, f"{name.upper()} ({split_name})",
                        out / "figures" / f"decision_{name}_{split_name}.png",
                    )
    _write_json(out / METRICS, metrics)
    return metrics


# -- full run ----------------------------------------------------------------


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def cmd_pipeline(cfg: ExperimentConfig, out_dir) -> dict:
    """Run every stage and write the consolidated ``run_report.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / CONFIG_COPY)
    stamps = {"start": _now()}

    def stage(name, fn, *args):
        try:
            result = fn(*args)
        except Exception as exc:
            raise StageError(name, exc) from exc
        stamps[name] = _now()
        return result

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        corpora = stage("simulate", cmd_simulate, cfg, out)
        stage("featurize", cmd_featurize, corpora[0], corpora[1], cfg, out)
        train_report = stage("train", cmd_train, out / DATASET, cfg, out)
        metrics = stage("evaluate", cmd_evaluate, out, out / DATASET, cfg, out)

    tips = np.loadtxt(out / TIPS, delimiter=",", skiprows=1, ndmin=2)
    report = {
        "metrics": metrics,
        "pca": {
            "n_components": train_report["pca_components"],
            "explained_variance_ratio": train_report["explained_variance_ratio"],
        },
        "histogram_tips": {
            "bin_center": tips[:, 0].tolist(),
            cfg.noise_pair[0]: {"mean": tips[:, 1].tolist(), "sem": tips[:, 2].tolist()},
            cfg.noise_pair[1]: {"mean": tips[:, 3].tolist(), "sem": tips[:, 4].tolist()},
        },
        "errors": {k: v["error"] for k, v in train_report["classifiers"].items() if "error" in v},
        "config": cfg.to_dict(),
        "provenance": {
            "config_hash": cfg.config_hash(),
            "master_seed": cfg.master_seed,
            "corpus_seeds": [corpus_seed(cfg.master_seed, i) for i in range(2)],
            "corpus_sha256": {p.name: sha256_file(p) for p in corpora},
            "version": __version__,
            "timestamps": {**stamps, "end": _now()},
        },
    }
    _write_json(out / REPORT, report)
    return report
