"""Classification metrics and the evaluation report container.

Conventions: confusion matrix rows are true labels, columns predictions.
Per-class precision/recall/F1 are one-vs-rest with 0/0 defined as 0.
Detection rate is the macro recall over the fault classes only; the false
alarm rate is the fraction of normal samples predicted as any fault, and
is None when the evaluation split contains no normal samples.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ShapeError


def _check_labels(y, classes, name):
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional")
    if y.size and (y.min() < 0 or y.max() >= classes):
        raise DataError(f"{name} contains labels outside [0, {classes - 1}]")
    return y


def confusion_matrix(y_true, y_pred, classes: int) -> np.ndarray:
    y_true = _check_labels(y_true, classes, "y_true")
    y_pred = _check_labels(y_pred, classes, "y_pred")
    if y_true.shape != y_pred.shape:
        raise ShapeError("y_true and y_pred differ in length")
    cm = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def precision_recall_f1(cm: np.ndarray, label: int | None = None):
    """Per-class one-vs-rest (precision, recall, f1).

    With ``label`` given, returns the scalar triple for that class;
    otherwise arrays over all classes.
    """
    tp = np.diag(cm).astype(np.float64)
    pred_pos = cm.sum(axis=0).astype(np.float64)
    actual_pos = cm.sum(axis=1).astype(np.float64)
    prec = np.array([_safe_div(tp[k], pred_pos[k]) for k in range(cm.shape[0])])
    rec = np.array([_safe_div(tp[k], actual_pos[k]) for k in range(cm.shape[0])])
    f1 = np.array([_safe_div(2 * prec[k] * rec[k], prec[k] + rec[k]) for k in range(cm.shape[0])])
    if label is not None:
        return float(prec[label]), float(rec[label]), float(f1[label])
    return prec, rec, f1


def accuracy(cm: np.ndarray) -> float:
    total = cm.sum()
    if total == 0:
        raise DataError("empty confusion matrix")
    return float(np.trace(cm) / total)


def detection_rate(cm: np.ndarray, normal_label: int = 0, fault_classes=None) -> float | None:
    """Macro recall over the fault classes (every class except ``normal_label``
    unless an explicit list is given); None when no fault samples exist."""
    _, rec, _ = precision_recall_f1(cm)
    if fault_classes is None:
        fault_classes = [k for k in range(cm.shape[0]) if k != normal_label]
    fault = [k for k in fault_classes if cm[k].sum() > 0]
    if not fault:
        return None
    return float(np.mean([rec[k] for k in fault]))


def false_alarm_rate(cm: np.ndarray, normal_label: int = 0) -> float | None:
    normal_total = cm[normal_label].sum()
    if normal_total == 0:
        return None
    false_alarms = normal_total - cm[normal_label, normal_label]
    return float(false_alarms / normal_total)


def roc_auc_binary(scores, positives) -> float:
    """Rank-based AUC (Mann-Whitney with midranks for ties)."""
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    if scores.shape != positives.shape or scores.ndim != 1:
        raise ShapeError("scores and positives must be equal-length vectors")
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both a positive and a negative sample")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    rank_sum = float(ranks[positives].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_auc_macro(score_matrix, y_true, classes: int) -> float | None:
    """One-vs-rest macro AUC from per-class scores (rows = samples).

    Classes absent from ``y_true`` are skipped with a warning; returns None
    if fewer than two classes are present.
    """
    score_matrix = np.asarray(score_matrix, dtype=np.float64)
    y_true = _check_labels(y_true, classes, "y_true")
    if score_matrix.shape != (y_true.size, classes):
        raise ShapeError(f"score matrix must be (n, {classes})")
    aucs = []
    for k in range(classes):
        pos = y_true == k
        if not pos.any() or pos.all():
            warnings.warn(f"class {k} absent from one side of the split; skipped in macro AUC")
            continue
        aucs.append(roc_auc_binary(score_matrix[:, k], pos))
    if not aucs:
        return None
    return float(np.mean(aucs))


@dataclass
class EvalReport:
    classes: int
    confusion: np.ndarray
    normal_label: int = 0
    score_matrix: np.ndarray | None = None
    y_true: np.ndarray | None = None
    runtime_s: float | None = None  # kept out of to_dict so reports stay reproducible
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.confusion = np.asarray(self.confusion, dtype=np.int64)
        if self.confusion.shape != (self.classes, self.classes):
            raise ShapeError("confusion matrix shape does not match the class count")

    # derived quantities -------------------------------------------------

    def per_class(self):
        prec, rec, f1 = precision_recall_f1(self.confusion)
        support = self.confusion.sum(axis=1)
        return [
            {
                "label": k,
                "precision": float(prec[k]),
                "recall": float(rec[k]),
                "f1": float(f1[k]),
                "support": int(support[k]),
            }
            for k in range(self.classes)
        ]

    def summary(self) -> dict:
        prec, rec, f1 = precision_recall_f1(self.confusion)
        acc = accuracy(self.confusion)
        micro = float(np.trace(self.confusion) / self.confusion.sum())
        far = false_alarm_rate(self.confusion, self.normal_label)
        auc = None
        if self.score_matrix is not None and self.y_true is not None:
            auc = roc_auc_macro(self.score_matrix, self.y_true, self.classes)
        out = {
            "accuracy": acc,
            "macro_precision": float(prec.mean()),
            "macro_recall": float(rec.mean()),
            "macro_f1": float(f1.mean()),
            "micro_precision": micro,
            "micro_recall": micro,
            "detection_rate": detection_rate(self.confusion, self.normal_label),
            "false_alarm_rate": far,
            "false_alarm_percent": None if far is None else far * 100.0,
            "macro_auc": auc,
        }
        return out

    def to_dict(self) -> dict:
        return {
            "classes": self.classes,
            "normal_label": self.normal_label,
            "confusion": self.confusion.tolist(),
            "per_class": self.per_class(),
            "summary": self.summary(),
            **({"extras": self.extras} if self.extras else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def per_class_csv(self) -> str:
        lines = ["label,precision,recall,f1,support"]
        for row in self.per_class():
            lines.append(
                f"{row['label']},{row['precision']!r},{row['recall']!r},{row['f1']!r},{row['support']}"
            )
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        """Aligned text table for terminals and logs."""
        rows = self.per_class()
        s = self.summary()
        width = max(5, len(str(self.classes - 1)) + 2)
        out = [f"{'class':>{width}}  {'prec':>8}  {'recall':>8}  {'f1':>8}  {'support':>8}"]
        for r in rows:
            out.append(
                f"{r['label']:>{width}}  {r['precision']:>8.4f}  {r['recall']:>8.4f}"
                f"  {r['f1']:>8.4f}  {r['support']:>8}"
            )
        out.append("")
        out.append(f"accuracy        {s['accuracy']:.4f}")
        dr = s["detection_rate"]
        out.append(f"detection rate  {'n/a' if dr is None else format(dr, '.4f')}")
        far = s["false_alarm_rate"]
        if far is None:
            out.append("false alarms    n/a (no normal samples)")
        else:
            out.append(f"false alarms    {far:.4f} ({s['false_alarm_percent']:.2f}%)")
        if s["macro_auc"] is not None:
            out.append(f"macro AUC       {s['macro_auc']:.4f}")
        return "\n".join(out) + "\n"
