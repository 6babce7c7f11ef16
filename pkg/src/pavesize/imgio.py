"""Reading and writing image files.

Supported on disk: 8-bit PNG (grayscale or RGB, via Pillow) and raw PGM
(P5, maxval up to 255).  Masks are written as P5 PGM with values 0 and 255.
Files are sniffed by magic bytes, not extension.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .raster import BinaryMask, RasterImage

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def load_image(path: str | Path) -> RasterImage:
    """Load a PNG or P5 PGM file as a RasterImage."""
    path = Path(path)
    data = path.read_bytes()
    if data[:8] == _PNG_SIGNATURE:
        return _decode_png(path)
    if data[:2] == b"P5":
        return _decode_pgm(data, path)
    raise ValueError(f"{path}: not a PNG or P5 PGM file")


def _decode_png(path: Path) -> RasterImage:
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.uint8)
        elif im.mode == "RGB":
            arr = np.asarray(im, dtype=np.uint8)
        else:
            raise ValueError(f"{path}: unsupported PNG mode {im.mode!r} (need 8-bit gray or RGB)")
    return RasterImage(arr)


def _decode_pgm(data: bytes, path: Path) -> RasterImage:
    # Header: "P5" then width, height, maxval as ASCII tokens.  Comment lines
    # start with '#'.  A single whitespace byte separates maxval from raster.
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise ValueError(f"{path}: malformed PGM header")
        fields.append(int(token))
    pos += 1  # the single whitespace byte after maxval
    width, height, maxval = fields[0], fields[1], fields[2]
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise ValueError(f"{path}: PGM maxval {maxval} unsupported (need 1..255)")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ValueError(f"{path}: truncated PGM raster")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return RasterImage(arr)


def write_mask_pgm(mask: BinaryMask, path: str | Path) -> None:
    """Write a binary mask as P5 PGM, foreground 255 and background 0."""
    path = Path(path)
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    body = (mask.bits * np.uint8(255)).tobytes()
    path.write_bytes(header + body)


def write_gray_png(image: RasterImage, path: str | Path) -> None:
    """Write a single-channel image as an 8-bit grayscale PNG."""
    if image.channels != 1:
        raise ValueError("write_gray_png expects a single-channel image")
    Image.fromarray(np.asarray(image.pixels), mode="L").save(Path(path), format="PNG")
