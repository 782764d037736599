# eeg_glt_tools/metrics.py
import numpy as np
from sklearn.metrics import accuracy_score
from sklearn.metrics import confusion_matrix as sk_confusion_matrix
from sklearn.metrics import precision_recall_fscore_support

from app.core.exceptions import EmptySplit
from app.schemas.metrics import MetricsReport


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    return sk_confusion_matrix(y_true, y_pred, labels=list(range(n_classes))).astype(np.int64)


def classification_metrics(y_true, y_pred, n_classes: int) -> MetricsReport:
    """
    Accuracy plus sensitivity, precision and F1 macro-averaged over all ``n_classes``.

    A class with no true (or no predicted) samples contributes 0 to the ratio it cannot form.
    """
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.size == 0:
        raise EmptySplit("Cannot compute metrics on an empty split.")

    labels = list(range(n_classes))
    precision, sensitivity, f1, _ = precision_recall_fscore_support(
        y_true, y_pred, labels=labels, average="macro", zero_division=0,
    )
    return MetricsReport(
        accuracy=float(accuracy_score(y_true, y_pred)),
        macro_sensitivity=float(sensitivity),
        macro_precision=float(precision),
        macro_f1=float(f1),
        confusion=confusion_matrix(y_true, y_pred, n_classes).tolist(),
        n_samples=int(y_true.size),
    )


def metrics_from_confusion(matrix: np.ndarray) -> MetricsReport:
    """Same report from an already counted confusion matrix."""
    matrix = np.asarray(matrix, dtype=np.int64)
    n_classes = matrix.shape[0]
    true_idx, pred_idx = np.indices(matrix.shape)
    counts = matrix.ravel()
    y_true = np.repeat(true_idx.ravel(), counts)
    y_pred = np.repeat(pred_idx.ravel(), counts)
    return classification_metrics(y_true, y_pred, n_classes)
