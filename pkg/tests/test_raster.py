"""Raster types, grayscale conversion, and image file round trips."""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

from pavesize.imgio import load_image, write_gray_png, write_mask_pgm
from pavesize.raster import BinaryMask, RasterImage, to_grayscale


def test_raster_image_accepts_gray_and_rgb():
    gray = RasterImage(np.zeros((4, 5), dtype=np.uint8))
    assert (gray.width, gray.height, gray.channels) == (5, 4, 1)
    rgb = RasterImage(np.zeros((4, 5, 3), dtype=np.uint8))
    assert (rgb.width, rgb.height, rgb.channels) == (5, 4, 3)


def test_raster_image_rejects_bad_inputs():
    with pytest.raises(ValueError):
        RasterImage(np.zeros((4, 5), dtype=np.float64))
    with pytest.raises(ValueError):
        RasterImage(np.zeros((4, 5, 2), dtype=np.uint8))
    with pytest.raises(ValueError):
        RasterImage(np.zeros((0, 5), dtype=np.uint8))


def test_raster_image_is_immutable():
    image = RasterImage(np.zeros((3, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        image.pixels[0, 0] = 1


def test_binary_mask_validates_values():
    BinaryMask(np.array([[0, 1], [1, 0]], dtype=np.uint8))
    BinaryMask(np.array([[True, False]]))
    with pytest.raises(ValueError):
        BinaryMask(np.array([[0, 2]], dtype=np.uint8))


def test_grayscale_fixed_point_for_gray_rgb():
    values = np.arange(256, dtype=np.uint8)
    rgb = np.stack([values, values, values], axis=-1).reshape(16, 16, 3)
    gray = to_grayscale(RasterImage(rgb))
    assert np.array_equal(gray.pixels.reshape(-1), values)


def test_grayscale_primaries():
    rgb = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=np.uint8)
    gray = to_grayscale(RasterImage(rgb))
    assert gray.pixels.tolist() == [[76, 150, 29]]


def test_grayscale_rejects_single_channel():
    with pytest.raises(ValueError, match="already grayscale"):
        to_grayscale(RasterImage(np.zeros((2, 2), dtype=np.uint8)))


def test_grayscale_weights_and_bound():
    assert abs(sum((0.299, 0.587, 0.114)) - 1.0) < 1e-9
    rng = np.random.default_rng(0)
    rgb = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
    gray = to_grayscale(RasterImage(rgb))
    # luma is a convex combination, so it can exceed the max channel only by rounding
    assert (gray.pixels.astype(int) <= rgb.astype(int).max(axis=2) + 1).all()
    assert (gray.pixels.astype(int) + 1 >= rgb.astype(int).min(axis=2)).all()


def test_png_gray_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    pixels = rng.integers(0, 256, (23, 31), dtype=np.uint8)
    path = tmp_path / "gray.png"
    write_gray_png(RasterImage(pixels), path)
    loaded = load_image(path)
    assert loaded.channels == 1
    assert np.array_equal(loaded.pixels, pixels)


def test_png_rgb_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    pixels = rng.integers(0, 256, (11, 17, 3), dtype=np.uint8)
    path = tmp_path / "rgb.png"
    Image.fromarray(pixels, mode="RGB").save(path)
    loaded = load_image(path)
    assert loaded.channels == 3
    assert np.array_equal(loaded.pixels, pixels)


def test_png_unsupported_mode_rejected(tmp_path):
    path = tmp_path / "rgba.png"
    Image.new("RGBA", (4, 4)).save(path)
    with pytest.raises(ValueError, match="unsupported PNG mode"):
        load_image(path)


def test_pgm_mask_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    bits = (rng.random((9, 13)) < 0.4).astype(np.uint8)
    path = tmp_path / "mask.pgm"
    write_mask_pgm(BinaryMask(bits), path)
    loaded = load_image(path)
    assert set(np.unique(loaded.pixels)) <= {0, 255}
    assert np.array_equal((loaded.pixels > 0).astype(np.uint8), bits)


def test_pgm_header_with_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n3 2\n# another\n255\n" + bytes(range(6)))
    loaded = load_image(path)
    assert loaded.width == 3 and loaded.height == 2
    assert loaded.pixels.tolist() == [[0, 1, 2], [3, 4, 5]]


def test_pgm_rejects_bad_files(tmp_path):
    truncated = tmp_path / "t.pgm"
    truncated.write_bytes(b"P5\n4 4\n255\n\x00\x00")
    with pytest.raises(ValueError, match="truncated"):
        load_image(truncated)
    wide = tmp_path / "w.pgm"
    wide.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(ValueError, match="maxval"):
        load_image(wide)


def test_load_image_rejects_unknown_format(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"hello world")
    with pytest.raises(ValueError, match="not a PNG or P5 PGM"):
        load_image(path)
