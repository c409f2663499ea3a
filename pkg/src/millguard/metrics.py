"""Model evaluation: confusion metrics, stratified k-fold CV, selection.

Stratification is deterministic round-robin: the i-th member of each class,
in dataset order, lands in fold i mod k. Metrics are computed over the
concatenated out-of-fold predictions, not averaged per fold.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .labeling import LabeledDataset
from .model import DataError
from .trees import (
    Hyperparams,
    MatrixDataset,
    ModelSpec,
    TreeModel,
    _design,
    _train,
    predict_matrix,
)


def confusion_matrix(
    true_labels: list[str], pred_labels: list[str], classes: tuple[str, ...]
) -> np.ndarray:
    """Rows are true classes, columns are predicted classes."""
    if len(true_labels) != len(pred_labels):
        raise DataError("label lists must align")
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true_labels, pred_labels):
        cm[index[t], index[p]] += 1
    return cm


def accuracy(cm: np.ndarray) -> float:
    total = int(cm.sum())
    if total == 0:
        raise DataError("empty confusion matrix")
    return float(np.trace(cm)) / total


def micro_recall(cm: np.ndarray) -> float:
    """Recall pooled over classes: sum(TP) / sum(TP + FN).

    Every sample contributes exactly one true class, so the denominator is
    the sample count and this coincides with accuracy.
    """
    tp = np.diag(cm).astype(float)
    fn = cm.sum(axis=1).astype(float) - tp
    denom = float(np.sum(tp + fn))
    if denom == 0:
        raise DataError("empty confusion matrix")
    return float(np.sum(tp)) / denom


def per_class_precision_recall(
    cm: np.ndarray, classes: tuple[str, ...]
) -> tuple[dict[str, float], dict[str, float]]:
    tp = np.diag(cm).astype(float)
    pred_totals = cm.sum(axis=0).astype(float)
    true_totals = cm.sum(axis=1).astype(float)
    precision = {}
    recall = {}
    for i, c in enumerate(classes):
        precision[c] = float(tp[i] / pred_totals[i]) if pred_totals[i] > 0 else 0.0
        recall[c] = float(tp[i] / true_totals[i]) if true_totals[i] > 0 else 0.0
    return precision, recall


def f1_macro(cm: np.ndarray, classes: tuple[str, ...]) -> float:
    """Unweighted mean of per-class F1. A class with zero support (and any
    zero P+R) contributes F1 = 0 rather than being dropped."""
    precision, recall = per_class_precision_recall(cm, classes)
    scores = []
    for c in classes:
        p, r = precision[c], recall[c]
        scores.append(2 * p * r / (p + r) if (p + r) > 0 else 0.0)
    return float(np.mean(scores))


@dataclass(frozen=True)
class EvalMetrics:
    classes: tuple[str, ...]
    confusion: tuple[tuple[int, ...], ...]
    precision: dict[str, float]
    recall: dict[str, float]
    f1_macro: float
    accuracy: float
    n_evaluated: int
    fold_f1: tuple[float, ...] = ()
    train_time_s: float = 0.0
    infer_time_s: float = 0.0

    def __post_init__(self) -> None:
        total = sum(sum(row) for row in self.confusion)
        if total != self.n_evaluated:
            raise DataError("confusion totals do not match evaluated count")

    @property
    def confusion_array(self) -> np.ndarray:
        return np.asarray(self.confusion, dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "confusion": [list(r) for r in self.confusion],
            "precision": dict(self.precision),
            "recall": dict(self.recall),
            "f1_macro": self.f1_macro,
            "accuracy": self.accuracy,
            "n_evaluated": self.n_evaluated,
            "fold_f1": list(self.fold_f1),
        }

    def with_times(self, train_time_s: float, infer_time_s: float) -> "EvalMetrics":
        return EvalMetrics(
            classes=self.classes,
            confusion=self.confusion,
            precision=self.precision,
            recall=self.recall,
            f1_macro=self.f1_macro,
            accuracy=self.accuracy,
            n_evaluated=self.n_evaluated,
            fold_f1=self.fold_f1,
            train_time_s=train_time_s,
            infer_time_s=infer_time_s,
        )


def _metrics_from_confusion(
    cm: np.ndarray,
    classes: tuple[str, ...],
    fold_f1: tuple[float, ...],
    train_s: float,
    infer_s: float,
) -> EvalMetrics:
    precision, recall = per_class_precision_recall(cm, classes)
    return EvalMetrics(
        classes=classes,
        confusion=tuple(tuple(int(v) for v in row) for row in cm),
        precision=precision,
        recall=recall,
        f1_macro=f1_macro(cm, classes),
        accuracy=accuracy(cm),
        n_evaluated=int(cm.sum()),
        fold_f1=fold_f1,
        train_time_s=train_s,
        infer_time_s=infer_s,
    )


def stratified_folds(labels: tuple[str, ...], k: int) -> list[np.ndarray]:
    """k index arrays; per class (in dataset order) members rotate through
    folds, so per-class fold counts differ by at most one."""
    if k < 2:
        raise DataError("k must be >= 2")
    counts: dict[str, int] = {}
    for l in labels:
        counts[l] = counts.get(l, 0) + 1
    for c in sorted(counts):
        if counts[c] < k:
            raise DataError(
                f"class {c!r} has {counts[c]} members, fewer than k={k} folds"
            )
    folds: list[list[int]] = [[] for _ in range(k)]
    seen: dict[str, int] = {}
    for i, l in enumerate(labels):
        j = seen.get(l, 0)
        folds[j % k].append(i)
        seen[l] = j + 1
    return [np.asarray(f, dtype=np.int64) for f in folds]


def cross_validate(
    ds: LabeledDataset | MatrixDataset, model_spec: ModelSpec, k: int = 10
) -> EvalMetrics:
    """Stratified k-fold CV of one model spec over a labeled dataset."""
    X, labels, _ = _design(ds)
    classes = tuple(sorted(set(labels)))
    folds = stratified_folds(labels, k)
    n = len(labels)
    true_all: list[str] = []
    pred_all: list[str] = []
    fold_f1: list[float] = []
    train_s = 0.0
    infer_s = 0.0
    for fold_idx in folds:
        mask = np.ones(n, dtype=bool)
        mask[fold_idx] = False
        train_rows = np.nonzero(mask)[0]
        train_ds = MatrixDataset(
            X=X[train_rows], labels=tuple(labels[i] for i in train_rows)
        )
        t0 = time.perf_counter()
        model = _train(model_spec.kind, train_ds, model_spec.hyperparams)
        train_s += time.perf_counter() - t0
        t0 = time.perf_counter()
        pred_idx, _ = predict_matrix(model, X[fold_idx])
        infer_s += time.perf_counter() - t0
        fold_true = [labels[i] for i in fold_idx]
        fold_pred = [model.classes[p] for p in pred_idx]
        true_all.extend(fold_true)
        pred_all.extend(fold_pred)
        fold_f1.append(f1_macro(confusion_matrix(fold_true, fold_pred, classes), classes))
    cm = confusion_matrix(true_all, pred_all, classes)
    return _metrics_from_confusion(cm, classes, tuple(fold_f1), train_s, infer_s)


def select_model(candidates: list[tuple[ModelSpec, EvalMetrics]]) -> ModelSpec:
    """Highest f1_macro wins; ties fall to lower inference time, then to the
    earliest candidate in declaration order."""
    if not candidates:
        raise DataError("select_model needs at least one candidate")
    best_i = 0
    for i in range(1, len(candidates)):
        _, m = candidates[i]
        _, b = candidates[best_i]
        if m.f1_macro > b.f1_macro or (
            m.f1_macro == b.f1_macro and m.infer_time_s < b.infer_time_s
        ):
            best_i = i
    return candidates[best_i][0]
