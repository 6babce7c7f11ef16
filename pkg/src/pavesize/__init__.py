"""Pothole surface-area measurement and classification from calibrated images.

The pipeline: calibrate a pixel-to-mm^2 scale from a reference page photo,
segment pothole images into binary masks, convert foreground pixel counts to
surface areas, and classify each area as Normal, Small, or Large against a
tire contact-patch cutoff.  Supporting tooling covers dataset manifests with
deterministic stratified splits, a small from-scratch convolutional baseline
classifier, import of external model predictions, and one-vs-rest metric
reports.
"""

from .cnn import ConvNet, gradient_check
from .manifest import (
    DatasetManifest,
    ManifestRecord,
    SplitSpec,
    ValidationReport,
    auto_label,
    build_manifest,
    read_manifest,
    stratified_split,
    validate_manifest,
    write_manifest,
)
from .metrics import (
    BinaryCounts,
    ConfusionMatrix,
    MetricsRow,
    binary_counts,
    confusion_matrix,
    metrics,
    one_vs_rest_report,
    render_report,
    search_confusion_matrices,
)
from .predictions import Prediction, PredictionSet, read_predictions_csv, write_predictions_csv
from .raster import BinaryMask, RasterImage, to_grayscale
from .segmentation import (
    Region,
    binarize,
    connected_components,
    dilate,
    erode,
    foreground_pixel_count,
    morph_open,
    otsu_threshold,
)
from .sizing import (
    CONTACT_AREAS,
    CalibrationInput,
    ContactSpec,
    PixelScale,
    SizeClass,
    SizeThresholds,
    classify_area,
    contact_area_lookup,
    measure_area,
    pixel_scale,
    read_profile,
    sq_in_to_mm2,
    write_profile,
)
from .training import (
    LossTrace,
    SweepResult,
    TrainConfig,
    epoch_sweep,
    predict,
    resize_normalize,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryCounts",
    "BinaryMask",
    "CONTACT_AREAS",
    "CalibrationInput",
    "ConfusionMatrix",
    "ContactSpec",
    "ConvNet",
    "DatasetManifest",
    "LossTrace",
    "ManifestRecord",
    "MetricsRow",
    "PixelScale",
    "Prediction",
    "PredictionSet",
    "RasterImage",
    "Region",
    "SizeClass",
    "SizeThresholds",
    "SplitSpec",
    "SweepResult",
    "TrainConfig",
    "ValidationReport",
    "auto_label",
    "binarize",
    "binary_counts",
    "build_manifest",
    "classify_area",
    "confusion_matrix",
    "connected_components",
    "contact_area_lookup",
    "dilate",
    "epoch_sweep",
    "erode",
    "foreground_pixel_count",
    "gradient_check",
    "measure_area",
    "metrics",
    "morph_open",
    "one_vs_rest_report",
    "otsu_threshold",
    "pixel_scale",
    "predict",
    "read_manifest",
    "read_predictions_csv",
    "read_profile",
    "render_report",
    "resize_normalize",
    "search_confusion_matrices",
    "sq_in_to_mm2",
    "stratified_split",
    "to_grayscale",
    "train",
    "validate_manifest",
    "write_manifest",
    "write_predictions_csv",
    "write_profile",
]
