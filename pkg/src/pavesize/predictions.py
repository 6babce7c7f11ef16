"""Prediction sets and their CSV form, for this package's models or others.

The CSV header is ``image_path,predicted_label`` optionally followed by one
``score_<class>`` column per class.  When score columns are present their
suffixes declare the class list; otherwise the caller must supply it.  Rows
with labels outside the class list, malformed fields, or score rows not
summing to 1 within 1e-4 are rejected with their line number.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

SCORE_PREFIX = "score_"


@dataclass(frozen=True)
class Prediction:
    image_path: str
    predicted_label: str
    scores: tuple[float, ...] | None = None  # aligned with the set's class order


@dataclass(frozen=True)
class PredictionSet:
    class_names: tuple[str, ...]
    predictions: tuple[Prediction, ...]

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "predictions", tuple(self.predictions))
        known = set(self.class_names)
        for pred in self.predictions:
            if pred.predicted_label not in known:
                raise ValueError(f"predicted label {pred.predicted_label!r} not in class list")
            if pred.scores is not None:
                if len(pred.scores) != len(self.class_names):
                    raise ValueError(f"{pred.image_path}: score count mismatch")
                if abs(sum(pred.scores) - 1.0) > 1e-4:
                    raise ValueError(f"{pred.image_path}: scores sum to {sum(pred.scores)!r}")

    def by_path(self) -> dict[str, Prediction]:
        return {pred.image_path: pred for pred in self.predictions}


def write_predictions_csv(preds: PredictionSet, path: str | Path) -> None:
    with_scores = any(pred.scores is not None for pred in preds.predictions)
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        header = ["image_path", "predicted_label"]
        if with_scores:
            header += [SCORE_PREFIX + name for name in preds.class_names]
        writer.writerow(header)
        for pred in preds.predictions:
            row = [pred.image_path, pred.predicted_label]
            if with_scores:
                if pred.scores is None:
                    raise ValueError(f"{pred.image_path}: missing scores in a scored set")
                row += [repr(value) for value in pred.scores]
            writer.writerow(row)


def read_predictions_csv(
    path: str | Path, class_names: Sequence[str] | None = None
) -> PredictionSet:
    """Import predictions, e.g. exported from an external model.

    Args:
        path: CSV file in the format described in the module docstring.
        class_names: declared class list; required when the file has no
            score columns, must match the score columns when it does.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[:2] != ["image_path", "predicted_label"]:
            raise ValueError(f"{path}: bad predictions header {header!r}")
        score_columns = header[2:]
        file_classes = None
        if score_columns:
            if not all(col.startswith(SCORE_PREFIX) for col in score_columns):
                raise ValueError(f"{path}: malformed score columns {score_columns!r}")
            file_classes = tuple(col[len(SCORE_PREFIX) :] for col in score_columns)
        if class_names is not None and file_classes is not None:
            if tuple(class_names) != file_classes:
                raise ValueError(
                    f"{path}: score columns declare classes {list(file_classes)}, "
                    f"expected {list(class_names)}"
                )
        classes = tuple(class_names) if class_names is not None else file_classes
        if classes is None:
            raise ValueError(f"{path}: no score columns; a class list is required")

        known = set(classes)
        predictions = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            image_path, label = row[0], row[1]
            if not image_path:
                raise ValueError(f"{path}:{line_no}: empty image_path")
            if label not in known:
                raise ValueError(f"{path}:{line_no}: label {label!r} not in classes {sorted(known)}")
            scores = None
            if score_columns:
                try:
                    scores = tuple(float(value) for value in row[2:])
                except ValueError:
                    raise ValueError(f"{path}:{line_no}: malformed score value") from None
                if abs(sum(scores) - 1.0) > 1e-4:
                    raise ValueError(f"{path}:{line_no}: scores sum to {sum(scores)!r}, not 1")
            predictions.append(Prediction(image_path, label, scores))
    return PredictionSet(classes, tuple(predictions))


def predictions_from_scores(
    class_names: Sequence[str], rows: Sequence[tuple[str, np.ndarray]]
) -> PredictionSet:
    """Build a PredictionSet from (path, score vector) pairs, argmax labels."""
    predictions = []
    for image_path, scores in rows:
        scores = np.asarray(scores, dtype=float)
        label = class_names[int(scores.argmax())]
        predictions.append(Prediction(image_path, label, tuple(float(s) for s in scores)))
    return PredictionSet(tuple(class_names), tuple(predictions))
