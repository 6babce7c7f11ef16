"""Labeled dataset manifests and deterministic stratified splits.

A manifest is a CSV with header ``image_path,label,height_label,area_mm2``;
image paths are stored relative to the manifest file's directory, line
endings are LF, encoding UTF-8.  The ``area_mm2`` column is empty when the
area is unknown.

Splitting is stratified per class and fully pinned: records of each class
are sorted by image path, shuffled by the Fisher-Yates procedure from
:mod:`pavesize.rng` (one xorshift64* stream for the whole split, consuming
classes in ``class_names`` order), and the first ``test_count`` records of
the shuffled order go to the test set.  Output manifests are re-sorted by
path, so a split depends only on the record set, the class order, and the
seed, never on insertion order.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .rng import DEFAULT_SEED, XorShift64Star
from .sizing import SizeThresholds, classify_area

logger = logging.getLogger(__name__)

MANIFEST_HEADER = ["image_path", "label", "height_label", "area_mm2"]


@dataclass(frozen=True)
class ManifestRecord:
    image_path: str
    label: str
    height_label: str = "any"
    area_mm2: float | None = None

    def __post_init__(self):
        if not self.image_path:
            raise ValueError("image_path must be non-empty")
        if not self.label:
            raise ValueError("label must be non-empty")


@dataclass(frozen=True)
class DatasetManifest:
    """Records plus the canonical class order (label index = list position)."""

    records: tuple[ManifestRecord, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class_names must be unique")
        known = set(self.class_names)
        for record in self.records:
            if record.label not in known:
                raise ValueError(f"record label {record.label!r} not in class_names")

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in self.class_names}
        for record in self.records:
            counts[record.label] += 1
        return counts


@dataclass(frozen=True)
class SplitSpec:
    """Exactly one of test_count / test_fraction must be set."""

    test_count: int | None = None
    test_fraction: float | None = None
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if (self.test_count is None) == (self.test_fraction is None):
            raise ValueError("set exactly one of test_count / test_fraction")
        if self.test_count is not None and self.test_count < 0:
            raise ValueError("test_count must be >= 0")
        if self.test_fraction is not None and not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must be in (0, 1)")


def scan_directory(root: str | Path) -> list[tuple[str, list[str]]]:
    """List (class_subdir, image_files) pairs under a dataset root."""
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"{root}: not a directory")
    listing = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        files = sorted(
            f"{sub.name}/{item.name}"
            for item in sub.iterdir()
            if item.is_file() and item.suffix.lower() in (".png", ".pgm")
        )
        listing.append((sub.name, files))
    return listing


def build_manifest(
    root_dir_listing: Iterable[tuple[str, Iterable[str]]],
    height_label: str = "any",
) -> DatasetManifest:
    """Build a manifest from (class_name, file_paths) pairs.

    Class names are sorted lexicographically.  Duplicate file paths raise;
    an empty class is kept in class_names and logged as a warning.
    """
    by_class: dict[str, list[str]] = {}
    for class_name, files in root_dir_listing:
        bucket = by_class.setdefault(class_name, [])
        bucket.extend(files)
    class_names = sorted(by_class)
    records = []
    seen: set[str] = set()
    for class_name in class_names:
        files = by_class[class_name]
        if not files:
            logger.warning("class %r has no files", class_name)
        for file_path in files:
            if file_path in seen:
                raise ValueError(f"duplicate file path {file_path!r}")
            seen.add(file_path)
            records.append(ManifestRecord(file_path, class_name, height_label))
    return DatasetManifest(tuple(records), tuple(class_names))


def auto_label(area_mm2: float, thresholds: SizeThresholds | None = None) -> str:
    """Class name for a measured area (Normal / Small / Large)."""
    return classify_area(area_mm2, thresholds).name


def stratified_split(
    manifest: DatasetManifest, spec: SplitSpec
) -> tuple[DatasetManifest, DatasetManifest]:
    """Split into (train, test) manifests; see the module docstring.

    With ``test_fraction`` the per-class test size is floor(fraction * n).
    Asking for more test records than a class holds raises, naming the class.
    """
    per_class: dict[str, list[ManifestRecord]] = {name: [] for name in manifest.class_names}
    seen: set[str] = set()
    for record in manifest.records:
        if record.image_path in seen:
            raise ValueError(f"duplicate image_path {record.image_path!r} in manifest")
        seen.add(record.image_path)
        per_class[record.label].append(record)

    rng = XorShift64Star(spec.seed)
    train_records: list[ManifestRecord] = []
    test_records: list[ManifestRecord] = []
    for class_name in manifest.class_names:
        records = sorted(per_class[class_name], key=lambda r: r.image_path)
        if spec.test_count is not None:
            take = spec.test_count
            if take > len(records):
                raise ValueError(
                    f"class {class_name!r} has {len(records)} records, "
                    f"cannot reserve {take} for test"
                )
        else:
            take = int(spec.test_fraction * len(records))
        rng.shuffle(records)
        test_records.extend(records[:take])
        train_records.extend(records[take:])

    train_records.sort(key=lambda r: r.image_path)
    test_records.sort(key=lambda r: r.image_path)
    return (
        DatasetManifest(tuple(train_records), manifest.class_names),
        DatasetManifest(tuple(test_records), manifest.class_names),
    )


@dataclass
class ValidationReport:
    class_counts: dict[str, int] = field(default_factory=dict)
    empty_classes: list[str] = field(default_factory=list)
    duplicate_paths: list[str] = field(default_factory=list)
    missing_files: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.duplicate_paths and not self.missing_files


def validate_manifest(
    manifest: DatasetManifest, base_dir: str | Path | None = None
) -> ValidationReport:
    """Check a manifest for duplicates, missing files, and oddities.

    File existence is only checked when ``base_dir`` (the manifest's
    directory) is given.  Mixed height labels within a class and class
    imbalance are warnings, not errors.
    """
    report = ValidationReport(class_counts=manifest.class_counts())
    report.empty_classes = [name for name, n in report.class_counts.items() if n == 0]

    seen: set[str] = set()
    heights: dict[str, set[str]] = {}
    for record in manifest.records:
        if record.image_path in seen and record.image_path not in report.duplicate_paths:
            report.duplicate_paths.append(record.image_path)
        seen.add(record.image_path)
        heights.setdefault(record.label, set()).add(record.height_label)
        if base_dir is not None and not (Path(base_dir) / record.image_path).is_file():
            report.missing_files.append(record.image_path)

    for class_name in manifest.class_names:
        labels = heights.get(class_name, set())
        if len(labels) > 1:
            report.warnings.append(
                f"class {class_name!r} mixes height labels {sorted(labels)}"
            )
    nonzero = [n for n in report.class_counts.values() if n > 0]
    if nonzero and max(nonzero) != min(nonzero):
        report.warnings.append(f"class imbalance: {report.class_counts}")
    for name in report.empty_classes:
        report.warnings.append(f"class {name!r} is empty")
    return report


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for record in manifest.records:
            area = "" if record.area_mm2 is None else repr(record.area_mm2)
            writer.writerow([record.image_path, record.label, record.height_label, area])


def read_manifest(path: str | Path, class_names: Sequence[str] | None = None) -> DatasetManifest:
    """Read a manifest CSV; class order defaults to sorted record labels."""
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ValueError(f"{path}: bad manifest header {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise ValueError(f"{path}:{line_no}: expected {len(MANIFEST_HEADER)} fields")
            image_path, label, height_label, area_text = row
            try:
                area = float(area_text) if area_text else None
            except ValueError:
                raise ValueError(f"{path}:{line_no}: bad area {area_text!r}") from None
            records.append(ManifestRecord(image_path, label, height_label, area))
    if class_names is None:
        class_names = sorted({record.label for record in records})
    return DatasetManifest(tuple(records), tuple(class_names))
