"""Binarization, morphological cleanup, and connected-component extraction.

Threshold semantics are pinned so independent reimplementations agree:

* ``fixed`` thresholding with value t marks pixels with intensity < t as
  foreground under dark polarity.  Bright polarity is the exact complement
  (intensity >= t).
* Otsu picks the threshold T in 1..255 maximising the between-class variance
  w0 * w1 * (mu0 - mu1)^2 between the classes {p < T} and {p >= T}, skipping
  candidates where either class is empty; ties break toward the smallest T.
  A constant image has no valid candidate and yields T = 0 (everything
  background under dark polarity).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .raster import BinaryMask, RasterImage

_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)
_STRUCTURE_8 = np.ones((3, 3), dtype=np.uint8)


@dataclass(frozen=True)
class Region:
    """One connected foreground component.

    ``id`` is the 1-based rank after sorting (largest pixel count first).
    ``bounding_box`` is (min_x, min_y, max_x, max_y), inclusive.
    """

    id: int
    pixel_count: int
    bounding_box: tuple[int, int, int, int]


def histogram256(image: RasterImage) -> np.ndarray:
    if image.channels != 1:
        raise ValueError("histogram256 expects a single-channel image")
    return np.bincount(image.pixels.ravel(), minlength=256)


def otsu_threshold(image: RasterImage) -> int:
    """Between-class-variance-maximising threshold (see module docstring)."""
    hist = histogram256(image).astype(np.float64)
    total = hist.sum()
    below = np.cumsum(hist)[:-1]  # pixels with intensity < T for T in 1..255
    above = total - below
    weighted = np.cumsum(hist * np.arange(256))[:-1]
    total_weighted = (hist * np.arange(256)).sum()
    valid = (below > 0) & (above > 0)
    if not valid.any():
        return 0
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = weighted / below
        mu1 = (total_weighted - weighted) / above
        variance = below * above * (mu0 - mu1) ** 2
    variance[~valid] = -1.0
    return int(np.argmax(variance)) + 1


def binarize(image: RasterImage, threshold: int | None = None, polarity: str = "dark") -> BinaryMask:
    """Threshold a single-channel image into a binary mask.

    Args:
        image: single-channel input.
        threshold: fixed threshold in [0, 255]; None selects Otsu's method.
        polarity: "dark" marks intensities below the threshold as foreground,
            "bright" marks the complement (intensities at or above it).
    """
    if image.channels != 1:
        raise ValueError("binarize expects a single-channel image")
    if polarity not in ("dark", "bright"):
        raise ValueError(f"unknown polarity {polarity!r}")
    if threshold is None:
        threshold = otsu_threshold(image)
    elif not 0 <= threshold <= 255:
        raise ValueError(f"fixed threshold {threshold} outside [0, 255]")
    dark = image.pixels < threshold
    bits = dark if polarity == "dark" else ~dark
    return BinaryMask(bits.astype(np.uint8))


def _window_reduce(bits: np.ndarray, radius: int, take_min: bool) -> np.ndarray:
    # Out-of-image pixels count as background for both erosion and dilation.
    size = 2 * radius + 1
    padded = np.pad(bits, radius, constant_values=0)
    windows = sliding_window_view(padded, (size, size))
    reduced = windows.min(axis=(2, 3)) if take_min else windows.max(axis=(2, 3))
    return np.ascontiguousarray(reduced)


def erode(mask: BinaryMask, radius: int) -> BinaryMask:
    """Erosion with a square element of side 2*radius + 1."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return mask
    return BinaryMask(_window_reduce(mask.bits, radius, take_min=True))


def dilate(mask: BinaryMask, radius: int) -> BinaryMask:
    """Dilation with a square element of side 2*radius + 1."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return mask
    return BinaryMask(_window_reduce(mask.bits, radius, take_min=False))


def morph_open(mask: BinaryMask, radius: int) -> BinaryMask:
    """Morphological opening (erosion then dilation); radius 0 is identity."""
    return dilate(erode(mask, radius), radius)


def connected_components(mask: BinaryMask, connectivity: int = 8) -> list[Region]:
    """Extract connected foreground regions.

    Regions are sorted by pixel count descending; ties break toward the
    smaller (min_y, min_x) corner.  Labelling is delegated to
    scipy.ndimage.label; counts, boxes, and ordering are computed here.
    """
    if connectivity == 4:
        structure = _STRUCTURE_4
    elif connectivity == 8:
        structure = _STRUCTURE_8
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    labels, count = ndimage.label(mask.bits, structure=structure)
    if count == 0:
        return []
    sizes = np.bincount(labels.ravel())[1:]
    boxes = ndimage.find_objects(labels)
    raw = []
    for index in range(count):
        ys, xs = boxes[index]
        raw.append(
            (
                int(sizes[index]),
                (int(xs.start), int(ys.start), int(xs.stop) - 1, int(ys.stop) - 1),
            )
        )
    raw.sort(key=lambda item: (-item[0], item[1][1], item[1][0]))
    return [
        Region(id=rank + 1, pixel_count=size, bounding_box=box)
        for rank, (size, box) in enumerate(raw)
    ]


def foreground_pixel_count(mask: BinaryMask) -> int:
    return int(mask.bits.sum())
