"""Pixel-to-area calibration and pothole size classification.

Calibration divides a reference object's known surface area by the number of
pixels it occupies in frame, giving mm^2 per pixel for that capture height.
A segmented pothole's area is then its foreground pixel count times that
scale.  Classification compares the area against two cutoffs:

* below ``min_detect_mm2``: Normal (no pothole worth reporting),
* up to and including ``large_cutoff_mm2``: Small (tolerable),
* strictly above ``large_cutoff_mm2``: Large (needs repair).

The default Large cutoff of 60,000 mm^2 is the circular-imprint estimate of a
passenger-car tire contact patch: a pothole wider than the patch lets the
wheel drop in rather than bridge it.  Alternative imprint models are listed
in CONTACT_AREAS.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

from .raster import BinaryMask
from .segmentation import connected_components, foreground_pixel_count

SQ_IN_TO_MM2 = 645.16

# Reference page defaults.  DEFAULT_PAGE_MM is the page size this tool's
# published calibration figures were computed with; the true ISO A4 height is
# 297 mm and is available via TRUE_A4_PAGE_MM for corrected runs.
DEFAULT_PAGE_MM = (210.0, 270.0)
TRUE_A4_PAGE_MM = (210.0, 297.0)

ANY_HEIGHT = "any"


class SizeClass(IntEnum):
    """Ordered severity classes; comparisons follow severity."""

    Normal = 0
    Small = 1
    Large = 2


@dataclass(frozen=True)
class ContactSpec:
    """Tire imprint model: shape name, inflation pressure, contact area."""

    shape: str
    pressure_mpa: float
    area_mm2: float
    area_sq_in: float


# Contact-patch estimates for a 195/60 R15 tire at 0.68 MPa (values kept as
# published; the sq-in column and mm^2 column were rounded independently at
# the source and do not always agree through SQ_IN_TO_MM2).
CONTACT_AREAS: dict[str, ContactSpec] = {
    "circular": ContactSpec("circular", 0.68, 60000.0, 93.0),
    "rectangular": ContactSpec("rectangular", 0.68, 61575.0, 95.0),
    "ellipse": ContactSpec("ellipse", 0.68, 60416.0, 93.6),
    "actual": ContactSpec("actual", 0.68, 60318.0, 93.5),
}

DEFAULT_LARGE_CUTOFF_MM2 = CONTACT_AREAS["circular"].area_mm2
DEFAULT_MIN_DETECT_MM2 = 5000.0


def sq_in_to_mm2(area_sq_in: float) -> float:
    """Exact unit conversion (1 inch = 25.4 mm, so 1 sq in = 645.16 mm^2)."""
    if area_sq_in < 0:
        raise ValueError("area must be >= 0")
    return area_sq_in * SQ_IN_TO_MM2


def contact_area_lookup(shape: str) -> ContactSpec:
    try:
        return CONTACT_AREAS[shape]
    except KeyError:
        raise ValueError(
            f"unknown contact shape {shape!r}; choose from {sorted(CONTACT_AREAS)}"
        ) from None


@dataclass(frozen=True)
class CalibrationInput:
    """Reference measurement: known area in mm^2 and its pixel footprint."""

    reference_area_mm2: float
    reference_pixel_count: int
    height_label: str = ANY_HEIGHT

    def __post_init__(self):
        if self.reference_area_mm2 <= 0:
            raise ValueError("reference_area_mm2 must be > 0")
        if self.reference_pixel_count <= 0:
            raise ValueError("reference_pixel_count must be > 0")


@dataclass(frozen=True)
class PixelScale:
    """mm^2 covered by one pixel at a given capture height."""

    mm2_per_pixel: float
    height_label: str = ANY_HEIGHT

    def __post_init__(self):
        if self.mm2_per_pixel <= 0:
            raise ValueError("mm2_per_pixel must be > 0")


@dataclass(frozen=True)
class SizeThresholds:
    large_cutoff_mm2: float = DEFAULT_LARGE_CUTOFF_MM2
    min_detect_mm2: float = DEFAULT_MIN_DETECT_MM2

    def __post_init__(self):
        if not 0 <= self.min_detect_mm2 < self.large_cutoff_mm2:
            raise ValueError("need 0 <= min_detect_mm2 < large_cutoff_mm2")


def pixel_scale(calibration: CalibrationInput) -> PixelScale:
    """Scale from a reference measurement: area / pixel count."""
    return PixelScale(
        mm2_per_pixel=calibration.reference_area_mm2 / calibration.reference_pixel_count,
        height_label=calibration.height_label,
    )


def ensure_height_match(scale_label: str, image_label: str) -> None:
    """Reject measuring an image against a profile from another height.

    The label "any" acts as a wildcard on either side.
    """
    if ANY_HEIGHT in (scale_label, image_label):
        return
    if scale_label != image_label:
        raise ValueError(
            f"height label mismatch: profile is {scale_label!r}, image is {image_label!r}"
        )


def measure_area(mask: BinaryMask, scale: PixelScale, mode: str = "all_foreground") -> float:
    """Surface area in mm^2 of the mask's foreground.

    ``all_foreground`` counts every foreground pixel; ``largest_region``
    counts only the biggest connected component.  An empty mask measures 0.
    """
    if mode == "all_foreground":
        count = foreground_pixel_count(mask)
    elif mode == "largest_region":
        regions = connected_components(mask)
        count = regions[0].pixel_count if regions else 0
    else:
        raise ValueError(f"unknown measure mode {mode!r}")
    return count * scale.mm2_per_pixel


def classify_area(area_mm2: float, thresholds: SizeThresholds | None = None) -> SizeClass:
    """Classify a measured area; the Large boundary itself is still Small."""
    if thresholds is None:
        thresholds = SizeThresholds()
    if area_mm2 < 0:
        raise ValueError("area must be >= 0")
    if area_mm2 < thresholds.min_detect_mm2:
        return SizeClass.Normal
    if area_mm2 <= thresholds.large_cutoff_mm2:
        return SizeClass.Small
    return SizeClass.Large


_PROFILE_KEYS = ("height_label", "reference_area_mm2", "reference_pixel_count", "mm2_per_pixel")


def write_profile(calibration: CalibrationInput, path: str | Path) -> PixelScale:
    """Persist a calibration profile as JSON; returns the derived scale."""
    scale = pixel_scale(calibration)
    payload = {
        "height_label": calibration.height_label,
        "reference_area_mm2": calibration.reference_area_mm2,
        "reference_pixel_count": calibration.reference_pixel_count,
        "mm2_per_pixel": scale.mm2_per_pixel,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return scale


def read_profile(path: str | Path) -> tuple[PixelScale, CalibrationInput]:
    """Load a calibration profile, checking the stored scale for consistency.

    The stored mm2_per_pixel must agree with reference_area_mm2 divided by
    reference_pixel_count within 1e-6 relative error.
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    missing = [key for key in _PROFILE_KEYS if key not in payload]
    if missing:
        raise ValueError(f"{path}: profile missing keys {missing}")
    calibration = CalibrationInput(
        reference_area_mm2=float(payload["reference_area_mm2"]),
        reference_pixel_count=int(payload["reference_pixel_count"]),
        height_label=str(payload["height_label"]),
    )
    stored = float(payload["mm2_per_pixel"])
    derived = calibration.reference_area_mm2 / calibration.reference_pixel_count
    if abs(stored - derived) > 1e-6 * abs(derived):
        raise ValueError(
            f"{path}: stored mm2_per_pixel {stored!r} inconsistent with "
            f"reference values (expected {derived!r})"
        )
    return PixelScale(stored, calibration.height_label), calibration
