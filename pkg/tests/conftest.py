"""Shared test helpers: brute-force oracles and synthetic image factories.

The oracles deliberately use naive per-pixel Python loops so they share no
code path with the vectorised implementations they check.
"""

from __future__ import annotations

import numpy as np

from pavesize.raster import BinaryMask, RasterImage


def brute_erode(bits: np.ndarray, radius: int) -> np.ndarray:
    """Per-pixel erosion; anything outside the image counts as background."""
    height, width = bits.shape
    out = np.zeros_like(bits)
    for y in range(height):
        for x in range(width):
            keep = True
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    ny, nx = y + dy, x + dx
                    if not (0 <= ny < height and 0 <= nx < width) or bits[ny, nx] == 0:
                        keep = False
                        break
                if not keep:
                    break
            out[y, x] = 1 if keep else 0
    return out


def brute_dilate(bits: np.ndarray, radius: int) -> np.ndarray:
    height, width = bits.shape
    out = np.zeros_like(bits)
    for y in range(height):
        for x in range(width):
            hit = False
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < height and 0 <= nx < width and bits[ny, nx] == 1:
                        hit = True
                        break
                if hit:
                    break
            out[y, x] = 1 if hit else 0
    return out


def brute_open(bits: np.ndarray, radius: int) -> np.ndarray:
    return brute_dilate(brute_erode(bits, radius), radius)


def flood_fill_components(bits: np.ndarray, connectivity: int = 8) -> list[list[tuple[int, int]]]:
    """Stack-based flood fill; returns each component's (y, x) coordinates."""
    if connectivity == 4:
        offsets = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    else:
        offsets = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    height, width = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    components = []
    for y in range(height):
        for x in range(width):
            if bits[y, x] == 0 or seen[y, x]:
                continue
            stack = [(y, x)]
            seen[y, x] = True
            coords = []
            while stack:
                cy, cx = stack.pop()
                coords.append((cy, cx))
                for dy, dx in offsets:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < height and 0 <= nx < width and bits[ny, nx] == 1 and not seen[ny, nx]:
                        seen[ny, nx] = True
                        stack.append((ny, nx))
            components.append(coords)
    return components


def brute_otsu(pixels: np.ndarray) -> int:
    """Per-threshold recomputation of the between-class variance objective."""
    values = pixels.ravel().tolist()
    best_t, best_score = 0, None
    for t in range(1, 256):
        low = [v for v in values if v < t]
        high = [v for v in values if v >= t]
        if not low or not high:
            continue
        mean_low = sum(low) / len(low)
        mean_high = sum(high) / len(high)
        score = len(low) * len(high) * (mean_low - mean_high) ** 2
        if best_score is None or score > best_score:
            best_t, best_score = t, score
    return best_t


def random_mask(rng: np.random.Generator, max_side: int = 64) -> BinaryMask:
    height = int(rng.integers(1, max_side + 1))
    width = int(rng.integers(1, max_side + 1))
    density = rng.uniform(0.05, 0.95)
    return BinaryMask((rng.random((height, width)) < density).astype(np.uint8))


def ellipse_blob_image(
    size: int,
    semi_x: float,
    semi_y: float,
    rng: np.random.Generator,
    background: float = 200.0,
    blob: float = 60.0,
    noise_sigma: float = 8.0,
) -> tuple[RasterImage, int]:
    """Noisy bright field with one dark hard-edged ellipse near the centre.

    Returns the image and the exact ground-truth ellipse pixel count.
    """
    margin = int(max(semi_x, semi_y)) + 2
    cy = int(rng.integers(margin, size - margin))
    cx = int(rng.integers(margin, size - margin))
    yy, xx = np.mgrid[0:size, 0:size]
    inside = ((xx - cx) / semi_x) ** 2 + ((yy - cy) / semi_y) ** 2 <= 1.0
    field = np.full((size, size), background)
    field[inside] = blob
    field = field + rng.normal(0.0, noise_sigma, (size, size))
    image = RasterImage(np.clip(np.round(field), 0, 255).astype(np.uint8))
    return image, int(inside.sum())


def blob_class_image(size: int, radius: int, rng: np.random.Generator) -> RasterImage:
    """32x32-style classifier input: dark disc of the given radius, or none."""
    background = rng.integers(150, 220)
    foreground = rng.integers(30, 80)
    field = np.full((size, size), float(background))
    if radius > 0:
        cy, cx = rng.integers(size // 3, 2 * size // 3, 2)
        yy, xx = np.mgrid[0:size, 0:size]
        field[(yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2] = foreground
    field = field + rng.normal(0.0, 8.0, (size, size))
    return RasterImage(np.clip(np.round(field), 0, 255).astype(np.uint8))


def blob_class_dataset(
    per_class: int, seed: int, size: int = 32
) -> list[tuple[RasterImage, str]]:
    """Balanced 3-class set whose classes differ by blob size, as in the
    Normal / Small / Large severity ladder."""
    rng = np.random.default_rng(seed)
    ranges = {"Normal": (0, 0), "Small": (3, 6), "Large": (9, 13)}
    pairs = []
    for label in ("Normal", "Small", "Large"):
        low, high = ranges[label]
        for _ in range(per_class):
            radius = 0 if high == 0 else int(rng.integers(low, high + 1))
            pairs.append((blob_class_image(size, radius, rng), label))
    return pairs
