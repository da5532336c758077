"""Classification and calibration metrics.

Probabilities are class-1 probabilities; the decision threshold is 0.5
(p >= 0.5 predicts the permeable class). roc_auc uses the midrank tie
convention and returns NaN (with a warning) when only one class is present,
so callers can exclude undefined folds from aggregation.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import rankdata

from .errors import ValidationError

DEFAULT_ECE_BINS = 30

# +1: higher is better; -1: lower is better.
METRIC_DIRECTIONS = {
    "accuracy": 1,
    "f1": 1,
    "roc_auc": 1,
    "brier": -1,
    "ece": -1,
    "rmse": -1,
    "mae": -1,
}


def _check(preds, labels, probabilistic=True):
    preds = np.asarray(preds, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if preds.shape != labels.shape or preds.size == 0:
        raise ValidationError("predictions and labels must be equal-length and nonempty")
    if probabilistic:
        if np.any(preds < 0.0) or np.any(preds > 1.0):
            raise ValidationError("probabilities must lie in [0,1]")
        if not np.all((labels == 0.0) | (labels == 1.0)):
            raise ValidationError("labels must be 0 or 1")
    return preds, labels


def accuracy(preds, labels) -> float:
    preds, labels = _check(preds, labels)
    return float(np.mean((preds >= 0.5) == (labels == 1.0)))


def f1(preds, labels) -> float:
    """F1 for the positive (permeable) class; 0 with a warning on zero division."""
    preds, labels = _check(preds, labels)
    predicted = preds >= 0.5
    actual = labels == 1.0
    tp = float(np.sum(predicted & actual))
    fp = float(np.sum(predicted & ~actual))
    fn = float(np.sum(~predicted & actual))
    denom = 2 * tp + fp + fn
    if denom == 0.0:
        warnings.warn("F1 undefined (no positives predicted or present); returning 0", stacklevel=2)
        return 0.0
    return 2 * tp / denom


def roc_auc(preds, labels) -> float:
    """Rank-statistic AUC with ties counted 0.5; NaN when labels are single-class."""
    preds, labels = _check(preds, labels)
    pos = labels == 1.0
    n_pos = int(pos.sum())
    n_neg = preds.size - n_pos
    if n_pos == 0 or n_neg == 0:
        warnings.warn("ROC-AUC undefined for single-class labels", stacklevel=2)
        return float("nan")
    ranks = rankdata(preds)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def brier(preds, labels) -> float:
    preds, labels = _check(preds, labels)
    return float(np.mean((preds - labels) ** 2))


def ece(preds, labels, bins: int = DEFAULT_ECE_BINS) -> float:
    """Binned expected calibration error over confidence of the predicted class.

    Confidence is max(p, 1-p); [0,1] is cut into `bins` equal-width bins;
    empty bins contribute nothing. Invariant under sample permutation and
    bounded in [0,1].
    """
    preds, labels = _check(preds, labels)
    if bins < 1:
        raise ValidationError("bins must be >= 1")
    predicted = preds >= 0.5
    confidence = np.where(predicted, preds, 1.0 - preds)
    correct = (predicted == (labels == 1.0)).astype(np.float64)
    idx = np.minimum((confidence * bins).astype(np.int64), bins - 1)
    total = 0.0
    n = preds.size
    for b in np.unique(idx):
        member = idx == b
        weight = member.sum() / n
        total += weight * abs(correct[member].mean() - confidence[member].mean())
    return float(total)


def rmse(preds, targets) -> float:
    preds, targets = _check(preds, targets, probabilistic=False)
    return float(np.sqrt(np.mean((preds - targets) ** 2)))


def mae(preds, targets) -> float:
    preds, targets = _check(preds, targets, probabilistic=False)
    return float(np.mean(np.abs(preds - targets)))


_METRIC_FUNCS = {
    "accuracy": accuracy,
    "f1": f1,
    "roc_auc": roc_auc,
    "brier": brier,
    "ece": ece,
    "rmse": rmse,
    "mae": mae,
}

CLASSIFICATION_METRICS = ("accuracy", "f1", "roc_auc", "brier", "ece")
REGRESSION_METRICS = ("rmse", "mae")


def compute_metric(name: str, preds, labels) -> float:
    try:
        func = _METRIC_FUNCS[name]
    except KeyError:
        raise ValidationError(f"unknown metric {name!r}") from None
    return func(preds, labels)
