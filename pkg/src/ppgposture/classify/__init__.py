"""From-scratch classifiers, validation and metrics."""

from .ann import ANN
from .base import Classifier, NotFittedError
from .benchmark import PRESETS, benchmark_grid, make_model, write_summary_csv
from .metrics import ConfusionMatrix, ModelReport, class_metrics, evaluate
from .models import KNN, LDA, DecisionTree, GaussianNB
from .svm import SVM
from .validation import Standardizer, ValidationError, cross_validate, split_stratified, stratified_folds

__all__ = [
    "ANN", "Classifier", "NotFittedError", "PRESETS", "benchmark_grid", "make_model", "write_summary_csv",
    "ConfusionMatrix", "ModelReport", "class_metrics", "evaluate", "KNN", "LDA", "DecisionTree",
    "GaussianNB", "SVM", "Standardizer", "ValidationError", "cross_validate", "split_stratified",
    "stratified_folds",
]
