"""Binary classification metrics: sensitivity, specificity, ROC, AUC.

The classification rule everywhere is `predicted positive iff score > t`,
so ties at the threshold fall on the negative side.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import UndefinedMetricError


def _checked(y_true, scores):
    y = np.asarray(y_true, dtype=np.int64).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    if y.shape != s.shape:
        raise UndefinedMetricError(f"labels {y.shape} and scores {s.shape} differ in length")
    if y.size == 0 or not np.isin(np.unique(y), (0, 1)).all():
        raise UndefinedMetricError("labels must be a non-empty 0/1 vector")
    return y, s


def sensitivity(y_true, scores, threshold: float) -> float:
    """True-positive rate at `threshold`. Errors when there are no positives."""
    y, s = _checked(y_true, scores)
    positives = int((y == 1).sum())
    if positives == 0:
        raise UndefinedMetricError("sensitivity is undefined without positive labels")
    return float(((s > threshold) & (y == 1)).sum() / positives)


def specificity(y_true, scores, threshold: float) -> float:
    """True-negative rate at `threshold`. Errors when there are no negatives."""
    y, s = _checked(y_true, scores)
    negatives = int((y == 0).sum())
    if negatives == 0:
        raise UndefinedMetricError("specificity is undefined without negative labels")
    return float(((s <= threshold) & (y == 0)).sum() / negatives)


@dataclass(frozen=True)
class RocCurve:
    """Step ROC: one (threshold, sensitivity, specificity) row per cut.

    Thresholds are strictly decreasing: a sentinel above the top score, every
    distinct score, and a sentinel below the bottom score.
    """

    thresholds: np.ndarray
    sens: np.ndarray
    spec: np.ndarray
    auc: float


def roc_curve(y_true, scores) -> RocCurve:
    """Exact ROC over all distinct score cuts; needs both classes present."""
    y, s = _checked(y_true, scores)
    pos = int((y == 1).sum())
    neg = int((y == 0).sum())
    if pos == 0 or neg == 0:
        raise UndefinedMetricError("ROC needs at least one positive and one negative")

    order = np.argsort(-s, kind="stable")
    s_desc = s[order]
    y_desc = y[order]
    # last position of each run of equal scores
    run_end = np.flatnonzero(np.diff(s_desc) != 0)
    distinct = s_desc[np.concatenate([run_end, [len(s_desc) - 1]])]
    tp_cum = np.cumsum(y_desc)
    fp_cum = np.cumsum(1 - y_desc)
    # rule is score > t, so counts at threshold distinct[k] exclude its own run
    above_end = np.concatenate([[0], tp_cum[run_end], [tp_cum[-1]]])
    above_fp = np.concatenate([[0], fp_cum[run_end], [fp_cum[-1]]])

    thresholds = np.concatenate([[np.inf], distinct, [-np.inf]])
    tp = np.concatenate([[0], above_end])
    fp = np.concatenate([[0], above_fp])
    sens = tp / pos
    spec = 1.0 - fp / neg

    x = 1.0 - spec
    area = float(np.sum(np.diff(x) * (sens[:-1] + sens[1:]) / 2.0))
    return RocCurve(thresholds=thresholds, sens=sens, spec=spec, auc=area)


def auc(y_true, scores) -> float:
    """Area under the ROC curve (trapezoidal over the exact step curve)."""
    return roc_curve(y_true, scores).auc


def write_roc_csv(path: str | Path, curve: RocCurve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "sensitivity", "specificity"])
        for t, se, sp in zip(curve.thresholds, curve.sens, curve.spec):
            writer.writerow([repr(float(t)), repr(float(se)), repr(float(sp))])
