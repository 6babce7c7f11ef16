"""Core raster types: 8-bit images and binary masks.

Pixel data is held in numpy arrays, row-major, origin at the top-left.
Arrays are frozen (read-only) after construction so instances can be shared
freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RasterImage:
    """8-bit image, single channel (H, W) or RGB (H, W, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {p.dtype}")
        if p.ndim == 2:
            pass
        elif p.ndim == 3 and p.shape[2] == 3:
            pass
        else:
            raise ValueError(f"expected (H, W) or (H, W, 3) pixels, got shape {p.shape}")
        if p.shape[0] == 0 or p.shape[1] == 0:
            raise ValueError("image dimensions must be positive")
        object.__setattr__(self, "pixels", _freeze(p))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else self.pixels.shape[2]


@dataclass(frozen=True)
class BinaryMask:
    """Binary mask with values 0 (background) and 1 (foreground)."""

    bits: np.ndarray

    def __post_init__(self):
        b = self.bits
        if b.ndim != 2:
            raise ValueError(f"expected 2-D bits, got shape {b.shape}")
        if b.shape[0] == 0 or b.shape[1] == 0:
            raise ValueError("mask dimensions must be positive")
        if b.dtype != np.uint8:
            if b.dtype == np.bool_:
                b = b.astype(np.uint8)
            else:
                raise ValueError(f"bits must be uint8 or bool, got {b.dtype}")
        if not np.isin(b, (0, 1)).all():
            raise ValueError("mask values must be 0 or 1")
        object.__setattr__(self, "bits", _freeze(b))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


def to_grayscale(image: RasterImage) -> RasterImage:
    """Convert an RGB image to single-channel luma.

    Uses the 0.299 / 0.587 / 0.114 channel weights with half-up rounding
    (the tie rule is pinned so results match across platforms).
    """
    if image.channels != 3:
        raise ValueError("image is already grayscale")
    rgb = image.pixels.astype(np.float64)
    luma = rgb[:, :, 0] * GRAY_WEIGHTS[0] + rgb[:, :, 1] * GRAY_WEIGHTS[1] + rgb[:, :, 2] * GRAY_WEIGHTS[2]
    gray = np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)
    return RasterImage(gray)


def ensure_grayscale(image: RasterImage) -> RasterImage:
    """Return the image itself if single channel, else its grayscale luma."""
    return image if image.channels == 1 else to_grayscale(image)
