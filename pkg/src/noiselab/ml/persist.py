"""JSON documents for fitted models."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .gnb import GnbModel
from .knn import KnnModel
from .pca import PcaModel
from .svm import Kernel, SvmModel

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def _arr(a):
    return np.asarray(a).tolist()


def model_to_dict(model) -> dict:
    if isinstance(model, PcaModel):
        body = {
            "type": "pca",
            "feature_means": _arr(model.feature_means),
            "feature_scales": _arr(model.feature_scales),
            "components": _arr(model.components),
            "explained_variance_ratio": _arr(model.explained_variance_ratio),
        }
    elif isinstance(model, KnnModel):
        body = {
            "type": "knn",
            "k": model.k,
            "train_points": _arr(model.train_points),
            "train_labels": _arr(model.train_labels),
        }
    elif isinstance(model, GnbModel):
        body = {
            "type": "gnb",
            "class_priors": _arr(model.class_priors),
            "means": _arr(model.means),
            "variances": _arr(model.variances),
        }
    elif isinstance(model, SvmModel):
        k = model.kernel
        body = {
            "type": "svm",
            "kernel": {"kind": k.kind, "gamma": k.gamma, "degree": k.degree, "coef0": k.coef0},
            "C": model.C,
            "support_vectors": _arr(model.support_vectors),
            "dual_coef": _arr(model.dual_coef),
            "bias": model.bias,
            "n_iter": model.n_iter,
            "converged": model.converged,
        }
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return {"schema_version": SCHEMA_VERSION, **body}


def model_from_dict(doc: dict):
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported schema_version {doc.get('schema_version')!r}, expected {SCHEMA_VERSION}"
        )
    kind = doc.get("type")
    if kind == "pca":
        return PcaModel(
            np.array(doc["feature_means"]),
            np.array(doc["feature_scales"]),
            np.array(doc["components"], ndmin=2),
            np.array(doc["explained_variance_ratio"]),
        )
    if kind == "knn":
        pts = np.array(doc["train_points"], dtype=float)
        return KnnModel(int(doc["k"]), pts.reshape(len(pts), -1), np.array(doc["train_labels"], dtype=np.int64))
    if kind == "gnb":
        return GnbModel(np.array(doc["class_priors"]), np.array(doc["means"]), np.array(doc["variances"]))
    if kind == "svm":
        sv = np.array(doc["support_vectors"], dtype=float)
        return SvmModel(
            Kernel(**doc["kernel"]),
            float(doc["C"]),
            sv.reshape(len(sv), -1),
            np.array(doc["dual_coef"], dtype=float),
            float(doc["bias"]),
            int(doc.get("n_iter", 0)),
            bool(doc.get("converged", True)),
        )
    raise SchemaError(f"unknown model type {kind!r}")


def save_model(model, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n")
    return path


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))
