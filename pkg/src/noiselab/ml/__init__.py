"""From-scratch PCA and binary classifiers."""

from .evaluation import Metrics, confusion_matrix, evaluate, train_test_split
from .gnb import GnbModel, fit_gnb, gnb_predict
from .knn import KnnModel, fit_knn, knn_predict
from .pca import PcaModel, fit_pca, pca_transform
from .persist import SCHEMA_VERSION, SchemaError, load_model, model_from_dict, model_to_dict, save_model
from .svm import ConvergenceError, Kernel, SvmModel, default_gamma, fit_svm, kkt_violation, svm_predict

__all__ = [
    "ConvergenceError",
    "GnbModel",
    "Kernel",
    "KnnModel",
    "Metrics",
    "PcaModel",
    "SCHEMA_VERSION",
    "SchemaError",
    "SvmModel",
    "confusion_matrix",
    "default_gamma",
    "evaluate",
    "fit_gnb",
    "fit_knn",
    "fit_pca",
    "fit_svm",
    "gnb_predict",
    "kkt_violation",
    "knn_predict",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "pca_transform",
    "save_model",
    "svm_predict",
    "train_test_split",
]
