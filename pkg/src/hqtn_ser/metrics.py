"""Confusion-matrix based classification metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricsReport:
    confusion: np.ndarray  # (C, C), rows = true class, cols = predicted
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float

    @property
    def n_classes(self) -> int:
        return self.confusion.shape[0]

    @property
    def macro_precision(self) -> float:
        return float(self.precision.mean())

    @property
    def macro_recall(self) -> float:
        return float(self.recall.mean())

    @property
    def macro_f1(self) -> float:
        return float(self.f1.mean())

    def _weighted(self, values: np.ndarray) -> float:
        total = self.support.sum()
        return float(values @ self.support / total) if total else 0.0

    @property
    def weighted_precision(self) -> float:
        return self._weighted(self.precision)

    @property
    def weighted_recall(self) -> float:
        return self._weighted(self.recall)

    @property
    def weighted_f1(self) -> float:
        return self._weighted(self.f1)

    def to_dict(self, class_names=None) -> dict:
        names = list(class_names) if class_names is not None else [str(i) for i in range(self.n_classes)]
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "per_class": {
                name: {
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "f1": float(self.f1[i]),
                    "support": int(self.support[i]),
                }
                for i, name in enumerate(names)
            },
            "confusion": self.confusion.tolist(),
        }

    def format_table(self, class_names=None) -> str:
        names = list(class_names) if class_names is not None else [str(i) for i in range(self.n_classes)]
        width = max(10, max(len(n) for n in names) + 2)
        lines = [f"{'class':<{width}}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>9}"]
        for i, name in enumerate(names):
            lines.append(
                f"{name:<{width}}{self.precision[i]:>10.4f}{self.recall[i]:>10.4f}"
                f"{self.f1[i]:>10.4f}{int(self.support[i]):>9d}"
            )
        total = int(self.support.sum())
        lines.append(
            f"{'macro avg':<{width}}{self.macro_precision:>10.4f}{self.macro_recall:>10.4f}"
            f"{self.macro_f1:>10.4f}{total:>9d}"
        )
        lines.append(
            f"{'weighted':<{width}}{self.weighted_precision:>10.4f}{self.weighted_recall:>10.4f}"
            f"{self.weighted_f1:>10.4f}{total:>9d}"
        )
        lines.append(f"{'accuracy':<{width}}{self.accuracy:>30.4f}{total:>9d}")
        return "\n".join(lines)


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


def compute_metrics(y_true, y_pred, n_classes: int | None = None) -> MetricsReport:
    """Per-class precision/recall/F1; a metric with a zero denominator is 0."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if n_classes is None:
        n_classes = int(max(y_true.max(initial=-1), y_pred.max(initial=-1))) + 1
    cm = confusion_matrix(y_true, y_pred, n_classes)
    tp = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0)
    actual = cm.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(actual > 0, tp / actual, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    total = cm.sum()
    accuracy = float(tp.sum() / total) if total else 0.0
    return MetricsReport(cm, precision, recall, f1, actual, accuracy)
