"""Training loop determinism, preprocessing, and epoch selection."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pavesize.cnn import ConvNet
from pavesize.raster import RasterImage
from pavesize.rng import XorShift64Star
from pavesize.training import (
    LossTrace,
    TrainConfig,
    epoch_sweep,
    evaluate_accuracy,
    predict,
    prepare_batch,
    resize_normalize,
    train,
    write_loss_csv,
    write_val_csv,
)


def toy_image(level: float, jitter: int, size: int = 8) -> RasterImage:
    rng = np.random.default_rng(jitter)
    pixels = np.clip(rng.normal(level, 6.0, size=(size, size)), 0, 255)
    return RasterImage(pixels.astype(np.uint8))


def toy_dataset(per_class: int = 8):
    """Separable brightness classes; trivially learnable."""
    pairs = []
    for i in range(per_class):
        pairs.append((toy_image(40.0, 100 + i), "dark"))
        pairs.append((toy_image(210.0, 200 + i), "bright"))
    return pairs


TOY_CFG = TrainConfig(
    epochs=3, batch_size=4, learning_rate=0.1, seed=5, input_width=8, input_height=8,
    input_channels=1,
)


# ---------------------------------------------------------------- config


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-0.1)
    with pytest.raises(ValueError):
        TrainConfig(input_width=3)
    with pytest.raises(ValueError):
        TrainConfig(input_channels=2)
    with pytest.raises(ValueError):
        TrainConfig(num_classes=1)
    TrainConfig(learning_rate=0.0)  # frozen-weights runs are allowed


def test_config_defaults():
    cfg = TrainConfig()
    assert (cfg.epochs, cfg.batch_size, cfg.learning_rate) == (5, 8, 0.1)
    assert (cfg.input_height, cfg.input_width, cfg.input_channels) == (224, 224, 3)
    assert cfg.num_classes is None


# ---------------------------------------------------------------- preprocessing


def test_resize_identity_is_exact_division():
    image = toy_image(128.0, 1)
    out = resize_normalize(image, 8, 8, 1)
    assert out.shape == (8, 8, 1)
    assert np.array_equal(out[:, :, 0], image.pixels / 255.0)


def test_resize_checkerboard_average():
    board = RasterImage(np.array([[0, 255], [255, 0]], dtype=np.uint8))
    out = resize_normalize(board, 1, 1, 1)
    assert out[0, 0, 0] == pytest.approx(0.5)


def test_resize_constant_preserved():
    flat = RasterImage(np.full((5, 7), 90, dtype=np.uint8))
    for height, width in ((3, 3), (10, 14), (7, 5)):
        out = resize_normalize(flat, height, width, 1)
        assert np.allclose(out, 90 / 255.0)


def test_resize_gray_to_rgb_replicates():
    image = toy_image(100.0, 2)
    out = resize_normalize(image, 8, 8, 3)
    assert out.shape == (8, 8, 3)
    assert np.array_equal(out[:, :, 0], out[:, :, 1])
    assert np.array_equal(out[:, :, 1], out[:, :, 2])


def test_resize_rgb_to_gray_uses_luma():
    red = np.zeros((4, 4, 3), dtype=np.uint8)
    red[:, :, 0] = 255
    out = resize_normalize(RasterImage(red), 4, 4, 1)
    assert np.allclose(out, 76 / 255.0)  # floor(0.299 * 255 + 0.5)


def test_resize_rejects_bad_channel_count():
    with pytest.raises(ValueError, match="channels"):
        resize_normalize(toy_image(10.0, 3), 4, 4, 2)


def test_prepare_batch_shapes_and_labels():
    pairs = toy_dataset(2)
    x, y = prepare_batch(pairs, ("bright", "dark"), TOY_CFG)
    assert x.shape == (4, 8, 8, 1)
    assert list(y) == [1, 0, 1, 0]  # dataset interleaves dark, bright


# ---------------------------------------------------------------- training


def test_train_bit_identical_reruns():
    pairs = toy_dataset()
    val = toy_dataset(2)
    net_a, trace_a = train(pairs, val, TOY_CFG)
    net_b, trace_b = train(pairs, val, TOY_CFG)
    assert trace_a.batch_losses == trace_b.batch_losses
    assert trace_a.val_accuracy == trace_b.val_accuracy
    for (_, a), (_, b) in zip(net_a.parameters(), net_b.parameters()):
        assert np.array_equal(a, b)


def test_train_zero_learning_rate_freezes_weights():
    cfg = TrainConfig(
        epochs=3, batch_size=4, learning_rate=0.0, seed=5, input_width=8, input_height=8,
        input_channels=1,
    )
    pairs = toy_dataset()
    net, trace = train(pairs, toy_dataset(2), cfg)
    reference = ConvNet.initialize(("bright", "dark"), 8, 8, 1, XorShift64Star(5))
    for (_, trained), (_, fresh) in zip(net.parameters(), reference.parameters()):
        assert np.array_equal(trained, fresh)
    accuracies = {acc for _, acc in trace.val_accuracy}
    assert len(accuracies) == 1


def test_train_loss_improves_on_separable_data():
    cfg = TrainConfig(
        epochs=10, batch_size=4, learning_rate=0.1, seed=5, input_width=8, input_height=8,
        input_channels=1,
    )
    pairs = toy_dataset()
    net, trace = train(pairs, [], cfg)
    per_epoch = {}
    for epoch, _, loss in trace.batch_losses:
        per_epoch.setdefault(epoch, []).append(loss)
    first = sum(per_epoch[1]) / len(per_epoch[1])
    last = sum(per_epoch[cfg.epochs]) / len(per_epoch[cfg.epochs])
    assert last < first
    assert evaluate_accuracy(net, pairs) == 1.0


def test_trace_iterations_globally_increasing():
    pairs = toy_dataset()  # 16 images, batch 4 -> 4 iterations per epoch
    _, trace = train(pairs, toy_dataset(1), TOY_CFG)
    iterations = [it for _, it, _ in trace.batch_losses]
    assert iterations == list(range(1, 3 * 4 + 1))
    epochs = [epoch for epoch, _, _ in trace.batch_losses]
    assert epochs == [1] * 4 + [2] * 4 + [3] * 4
    assert [epoch for epoch, _ in trace.val_accuracy] == [1, 2, 3]


def test_trace_handles_ragged_final_batch():
    pairs = toy_dataset(3)  # 6 images, batch 4 -> 2 iterations per epoch
    _, trace = train(pairs, [], TOY_CFG)
    assert len(trace.batch_losses) == TOY_CFG.epochs * math.ceil(6 / 4)
    assert trace.val_accuracy == []  # no validation set supplied


def test_train_input_validation():
    with pytest.raises(ValueError, match="empty"):
        train([], [], TOY_CFG)
    single = [(toy_image(40.0, 1), "only")] * 4
    with pytest.raises(ValueError, match="2 classes"):
        train(single, [], TOY_CFG)
    pairs = toy_dataset(2)
    with pytest.raises(ValueError, match="Hole"):
        train(pairs, [(toy_image(40.0, 9), "Hole")], TOY_CFG)
    bad_counts = TrainConfig(
        epochs=1, batch_size=4, seed=5, input_width=8, input_height=8, input_channels=1,
        num_classes=3,
    )
    with pytest.raises(ValueError, match="num_classes"):
        train(pairs, [], bad_counts)


def test_class_names_are_sorted_train_labels():
    net, _ = train(toy_dataset(2), [], TOY_CFG)
    assert net.class_names == ("bright", "dark")


# ---------------------------------------------------------------- inference


def test_predict_returns_valid_distribution():
    net, _ = train(toy_dataset(), [], TOY_CFG)
    label, scores = predict(net, toy_image(215.0, 999))
    assert label in net.class_names
    assert scores.shape == (2,)
    assert scores.sum() == pytest.approx(1.0)
    assert label == "bright"
    dark_label, _ = predict(net, toy_image(35.0, 998))
    assert dark_label == "dark"


# ---------------------------------------------------------------- epoch sweep


def test_epoch_sweep_single_candidate():
    result = epoch_sweep(toy_dataset(4), toy_dataset(2), TOY_CFG, [2])
    assert [epochs for epochs, _ in result.rows] == [2]
    assert result.recommended_epochs == 2


def test_epoch_sweep_all_equal_prefers_smallest():
    frozen = TrainConfig(
        epochs=1, batch_size=4, learning_rate=0.0, seed=5, input_width=8, input_height=8,
        input_channels=1,
    )
    result = epoch_sweep(toy_dataset(4), toy_dataset(2), frozen, [3, 1, 2])
    accuracies = {acc for _, acc in result.rows}
    assert len(accuracies) == 1
    assert result.recommended_epochs == 1


def test_epoch_sweep_rule_matches_rows():
    result = epoch_sweep(toy_dataset(), toy_dataset(3), TOY_CFG, [1, 2, 3])
    best = max(acc for _, acc in result.rows)
    eligible = [epochs for epochs, acc in result.rows if acc >= best - 0.005 - 1e-12]
    assert result.recommended_epochs == min(eligible)


def test_epoch_sweep_validation():
    with pytest.raises(ValueError, match="non-empty"):
        epoch_sweep(toy_dataset(2), toy_dataset(1), TOY_CFG, [])
    with pytest.raises(ValueError, match="validation"):
        epoch_sweep(toy_dataset(2), [], TOY_CFG, [1])


# ---------------------------------------------------------------- trace export


def test_loss_and_val_csv_round_trip(tmp_path):
    trace = LossTrace(
        batch_losses=[(1, 1, 0.6931471805599453), (1, 2, 0.25)],
        val_accuracy=[(1, 0.875)],
    )
    loss_path = tmp_path / "loss.csv"
    val_path = tmp_path / "val.csv"
    write_loss_csv(trace, loss_path)
    write_val_csv(trace, val_path)
    loss_lines = loss_path.read_text().splitlines()
    assert loss_lines[0] == "epoch,iteration,loss"
    assert loss_lines[1] == "1,1,0.6931471805599453"
    assert float(loss_lines[1].split(",")[2]) == trace.batch_losses[0][2]
    val_lines = val_path.read_text().splitlines()
    assert val_lines == ["epoch,val_accuracy", "1,0.875"]
