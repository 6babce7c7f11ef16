"""Confusion matrices, one-vs-rest metrics, and report rendering.

Conventions, fixed once for the whole package:

* Confusion matrix rows are true classes, columns are predicted classes,
  both in the order given by ``class_names``.
* Per-class metrics come from one-vs-rest counts:
  accuracy = (TP + TN) / total, precision = TP / (TP + FP),
  recall = TP / (TP + FN), f1 = 2 * precision * recall / (precision +
  recall).  A zero denominator yields 0 for that metric.
* Rendered values are fixed at 4 decimal places; the CSV header is exactly
  ``class,accuracy,precision,recall,f1``.

``render_report`` also offers a legacy column placement (see
``table3_layout``) in which the precision and recall values appear in each
other's columns, matching a previously published results table so the two
can be diffed mechanically.  The metric definitions themselves never swap.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .manifest import DatasetManifest
from .predictions import PredictionSet


@dataclass(frozen=True)
class ConfusionMatrix:
    class_names: tuple[str, ...]
    counts: np.ndarray  # shape (K, K), rows true, columns predicted

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.class_names)
        if counts.shape != (k, k):
            raise ValueError(f"counts shape {counts.shape} does not match {k} classes")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def overall_accuracy(self) -> float:
        if self.total == 0:
            return 0.0
        return float(np.trace(self.counts) / self.total)


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for value in (self.tp, self.tn, self.fp, self.fn):
            if value < 0:
                raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsRow:
    class_name: str
    accuracy: float
    precision: float
    recall: float
    f1: float


def confusion_matrix(truth: DatasetManifest, preds: PredictionSet) -> ConfusionMatrix:
    """Tally predictions against a labeled manifest.

    Every truth path must have exactly one prediction and vice versa, and
    the prediction set's class list must match the manifest's classes.
    """
    if not truth.records:
        raise ValueError("truth set is empty")
    if set(preds.class_names) != set(truth.class_names):
        raise ValueError(
            f"class sets differ: truth {sorted(truth.class_names)}, "
            f"predictions {sorted(preds.class_names)}"
        )
    by_path = preds.by_path()
    if len(by_path) != len(preds.predictions):
        raise ValueError("prediction set contains duplicate image paths")
    truth_paths = [record.image_path for record in truth.records]
    missing = sorted(set(truth_paths) - set(by_path))
    extra = sorted(set(by_path) - set(truth_paths))
    if missing or extra:
        raise ValueError(f"prediction/truth path mismatch: missing {missing}, extra {extra}")

    index = {name: i for i, name in enumerate(truth.class_names)}
    counts = np.zeros((len(index), len(index)), dtype=np.int64)
    for record in truth.records:
        predicted = by_path[record.image_path].predicted_label
        counts[index[record.label], index[predicted]] += 1
    return ConfusionMatrix(truth.class_names, counts)


def binary_counts(matrix: ConfusionMatrix, positive: str) -> BinaryCounts:
    """Collapse a multiclass matrix to one-vs-rest counts for one class."""
    if positive not in matrix.class_names:
        raise ValueError(f"class {positive!r} not in {list(matrix.class_names)}")
    i = matrix.class_names.index(positive)
    counts = matrix.counts
    tp = int(counts[i, i])
    fn = int(counts[i, :].sum() - tp)
    fp = int(counts[:, i].sum() - tp)
    tn = int(counts.sum() - tp - fn - fp)
    return BinaryCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def metrics(counts: BinaryCounts, class_name: str = "positive") -> MetricsRow:
    """Accuracy, precision, recall, and F1 with zero-denominator -> 0."""
    if counts.total == 0:
        raise ValueError("cannot compute metrics over zero samples")
    accuracy = (counts.tp + counts.tn) / counts.total
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricsRow(class_name, accuracy, precision, recall, f1)


def one_vs_rest_report(matrix: ConfusionMatrix) -> list[MetricsRow]:
    return [metrics(binary_counts(matrix, name), name) for name in matrix.class_names]


def render_report(rows: Iterable[MetricsRow], fmt: str = "text", table3_layout: bool = False) -> str:
    """Render metric rows as a text table or CSV, 4 decimal places.

    With ``table3_layout`` the precision and recall values swap columns
    (placement only); the default order is the definition-faithful one.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no metric rows to render")
    header = ["class", "accuracy", "precision", "recall", "f1"]
    if table3_layout:
        header = ["class", "accuracy", "precision", "f1", "recall"]
    cells = []
    for row in rows:
        if table3_layout:
            values = [row.accuracy, row.recall, row.f1, row.precision]
        else:
            values = [row.accuracy, row.precision, row.recall, row.f1]
        cells.append([row.class_name] + [f"{value:.4f}" for value in values])
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(line) for line in cells]
        return "\n".join(lines) + "\n"
    if fmt == "text":
        widths = [
            max(len(header[col]), *(len(line[col]) for line in cells)) if cells else len(header[col])
            for col in range(len(header))
        ]
        parts = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        for line in cells:
            parts.append("  ".join(value.ljust(w) for value, w in zip(line, widths)))
        return "\n".join(parts) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def write_matrix_csv(matrix: ConfusionMatrix, path: str | Path) -> None:
    """Write counts with a leading header row and column of class names."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([""] + list(matrix.class_names))
        for name, row in zip(matrix.class_names, matrix.counts):
            writer.writerow([name] + [int(value) for value in row])


def read_matrix_csv(path: str | Path) -> ConfusionMatrix:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header or header[0] != "":
            raise ValueError(f"{path}: bad matrix header {header!r}")
        class_names = tuple(header[1:])
        rows = []
        row_names = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{line_no}: expected {len(header)} fields")
            row_names.append(row[0])
            try:
                rows.append([int(value) for value in row[1:]])
            except ValueError:
                raise ValueError(f"{path}:{line_no}: non-integer count") from None
    if tuple(row_names) != class_names:
        raise ValueError(f"{path}: row names {row_names} do not match columns {list(class_names)}")
    return ConfusionMatrix(class_names, np.array(rows, dtype=np.int64))


def search_confusion_matrices(
    class_names: Sequence[str],
    targets: Sequence[tuple[float, float, float, float]],
    per_class_total: int = 50,
    accuracy_tol: float = 5e-5,
    metric_tol: float = 5e-3,
) -> list[np.ndarray]:
    """Enumerate integer confusion matrices consistent with rounded metrics.

    Given per-class (accuracy, precision, recall, f1) targets as published
    at limited precision, finds every K x K matrix with ``per_class_total``
    true samples per class whose exact one-vs-rest metrics fall within the
    stated tolerances of each target.  Precision/recall/f1 tolerances default
    to a half unit at 2 decimal places, accuracy to a half unit at 4.

    The arithmetic here is spelled out directly on integer counts rather
    than routed through :func:`metrics`, so this can serve as an independent
    cross-check of that path.  Returns matrices in deterministic order.
    """
    k = len(class_names)
    if len(targets) != k:
        raise ValueError("need one target tuple per class")
    eps = 1e-12
    total = k * per_class_total

    diag_options: list[list[int]] = []
    for _, _, recall_target, _ in targets:
        options = [
            tp
            for tp in range(per_class_total + 1)
            if abs(tp / per_class_total - recall_target) <= metric_tol + eps
        ]
        if not options:
            return []
        diag_options.append(options)

    def off_diagonal_rows(row_class: int, tp: int):
        remainder = per_class_total - tp
        for split in itertools.product(range(remainder + 1), repeat=k - 1):
            if sum(split) != remainder:
                continue
            row = [0] * k
            row[row_class] = tp
            position = 0
            for col in range(k):
                if col == row_class:
                    continue
                row[col] = split[position]
                position += 1
            yield row

    found = []
    for diagonal in itertools.product(*diag_options):
        row_choices = [list(off_diagonal_rows(i, diagonal[i])) for i in range(k)]
        for rows in itertools.product(*row_choices):
            matrix = np.array(rows, dtype=np.int64)
            ok = True
            for i, (acc_t, prec_t, rec_t, f1_t) in enumerate(targets):
                tp = int(matrix[i, i])
                fn = int(matrix[i, :].sum()) - tp
                fp = int(matrix[:, i].sum()) - tp
                tn = total - tp - fn - fp
                acc = (tp + tn) / total
                prec = tp / (tp + fp) if tp + fp else 0.0
                rec = tp / (tp + fn) if tp + fn else 0.0
                f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
                if (
                    abs(acc - acc_t) > accuracy_tol + eps
                    or abs(prec - prec_t) > metric_tol + eps
                    or abs(rec - rec_t) > metric_tol + eps
                    or abs(f1 - f1_t) > metric_tol + eps
                ):
                    ok = False
                    break
            if ok:
                found.append(matrix)
    return found
