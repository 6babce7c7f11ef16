"""Training loop, preprocessing, and epoch selection for the baseline net.

Preprocessing is bilinear resampling with half-pixel-centre alignment
(source coordinate = (i + 0.5) * in/out - 0.5, clamped to the image), then
scaling intensities to [0, 1].  An image already at the target size passes
through exactly as pixel / 255.

Determinism: for a fixed seed and inputs, training is bit-identical run to
run.  One pinned generator stream (see :mod:`pavesize.rng`) provides first
the initial weights and then each epoch's shuffle of the training order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cnn import ConvNet, loss_and_gradients, predict_scores
from .imgio import load_image
from .manifest import DatasetManifest
from .raster import RasterImage, to_grayscale
from .rng import DEFAULT_SEED, XorShift64Star

LabeledImage = tuple[RasterImage, str]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 8
    learning_rate: float = 0.1
    seed: int = DEFAULT_SEED
    input_width: int = 224
    input_height: int = 224
    input_channels: int = 3
    num_classes: int | None = None  # None: inferred from the training labels

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.input_width < 4 or self.input_height < 4:
            raise ValueError("input dims must be at least 4x4")
        if self.input_channels not in (1, 3):
            raise ValueError("input_channels must be 1 or 3")
        if self.num_classes is not None and self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")


@dataclass
class LossTrace:
    """Per-iteration batch losses and per-epoch validation accuracy."""

    batch_losses: list[tuple[int, int, float]] = field(default_factory=list)
    val_accuracy: list[tuple[int, float]] = field(default_factory=list)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[tuple[int, float], ...]
    recommended_epochs: int


def resize_normalize(image: RasterImage, height: int, width: int, channels: int) -> np.ndarray:
    """Resample to (height, width, channels) float64 in [0, 1].

    RGB input is converted to luma first when a single channel is requested;
    single-channel input is replicated when three channels are requested.
    """
    if channels == 1:
        if image.channels == 3:
            image = to_grayscale(image)
        plane = image.pixels.astype(np.float64)[:, :, None]
    elif channels == 3:
        if image.channels == 1:
            plane = np.repeat(image.pixels.astype(np.float64)[:, :, None], 3, axis=2)
        else:
            plane = image.pixels.astype(np.float64)
    else:
        raise ValueError("channels must be 1 or 3")
    resized = _bilinear(plane, height, width)
    return resized / 255.0


def _bilinear(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    in_h, in_w = plane.shape[:2]
    src_y = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0, in_h - 1)
    src_x = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0, in_w - 1)
    y0 = np.floor(src_y).astype(int)
    x0 = np.floor(src_x).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (src_y - y0)[:, None, None]
    wx = (src_x - x0)[None, :, None]
    top = plane[y0][:, x0] * (1 - wx) + plane[y0][:, x1] * wx
    bottom = plane[y1][:, x0] * (1 - wx) + plane[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def prepare_batch(
    pairs: Sequence[LabeledImage], class_names: Sequence[str], cfg: TrainConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Stack labeled images into model-ready arrays (images, label indices)."""
    index = {name: i for i, name in enumerate(class_names)}
    images = np.stack(
        [
            resize_normalize(img, cfg.input_height, cfg.input_width, cfg.input_channels)
            for img, _ in pairs
        ]
    )
    labels = np.array([index[label] for _, label in pairs], dtype=np.int64)
    return images, labels


def train(
    train_pairs: Sequence[LabeledImage],
    val_pairs: Sequence[LabeledImage],
    cfg: TrainConfig,
) -> tuple[ConvNet, LossTrace]:
    """Mini-batch SGD on mean cross-entropy.

    Classes are the sorted distinct training labels.  Validation labels
    outside that set raise.  The trace records (epoch, iteration, mean batch
    loss) for every iteration, with a globally increasing iteration counter,
    and validation accuracy after each epoch.
    """
    if not train_pairs:
        raise ValueError("training set is empty")
    class_names = sorted({label for _, label in train_pairs})
    if len(class_names) < 2:
        raise ValueError("training set must contain at least 2 classes")
    if cfg.num_classes is not None and cfg.num_classes != len(class_names):
        raise ValueError(
            f"num_classes={cfg.num_classes} but training labels define {len(class_names)}"
        )
    unknown = sorted({label for _, label in val_pairs} - set(class_names))
    if unknown:
        raise ValueError(f"validation labels {unknown} not present in training set")

    x_train, y_train = prepare_batch(train_pairs, class_names, cfg)
    x_val, y_val = (None, None)
    if val_pairs:
        x_val, y_val = prepare_batch(val_pairs, class_names, cfg)

    rng = XorShift64Star(cfg.seed)
    net = ConvNet.initialize(
        class_names, cfg.input_height, cfg.input_width, cfg.input_channels, rng
    )
    trace = LossTrace()
    iteration = 0
    order = list(range(len(train_pairs)))
    for epoch in range(1, cfg.epochs + 1):
        rng.shuffle(order)
        for start in range(0, len(order), cfg.batch_size):
            batch_idx = order[start : start + cfg.batch_size]
            loss, grads = loss_and_gradients(net, x_train[batch_idx], y_train[batch_idx])
            for name, param in net.parameters():
                param -= cfg.learning_rate * grads[name]
            iteration += 1
            trace.batch_losses.append((epoch, iteration, loss))
        if x_val is not None:
            trace.val_accuracy.append((epoch, _accuracy(net, x_val, y_val)))
    return net, trace


def _accuracy(net: ConvNet, x: np.ndarray, y: np.ndarray) -> float:
    predicted = predict_scores(net, x).argmax(axis=1)
    return float((predicted == y).mean())


def evaluate_accuracy(net: ConvNet, pairs: Sequence[LabeledImage]) -> float:
    cfg = TrainConfig(
        input_width=net.input_width,
        input_height=net.input_height,
        input_channels=net.input_channels,
    )
    x, y = prepare_batch(pairs, net.class_names, cfg)
    return _accuracy(net, x, y)


def predict(net: ConvNet, image: RasterImage) -> tuple[str, np.ndarray]:
    """Predicted label and softmax scores; ties go to the lowest class index."""
    x = resize_normalize(image, net.input_height, net.input_width, net.input_channels)
    scores = predict_scores(net, x[None, ...])[0]
    return net.class_names[int(scores.argmax())], scores


def epoch_sweep(
    train_pairs: Sequence[LabeledImage],
    val_pairs: Sequence[LabeledImage],
    cfg: TrainConfig,
    epoch_values: Sequence[int],
) -> SweepResult:
    """Train once per candidate epoch count, all from the same seed.

    Recommends the smallest epoch value whose final validation accuracy is
    within 0.5 percentage points of the best; with a single candidate or all
    accuracies equal this is simply the smallest candidate.
    """
    if not epoch_values:
        raise ValueError("epoch_values must be non-empty")
    if not val_pairs:
        raise ValueError("epoch_sweep needs a validation set")
    rows = []
    for epochs in epoch_values:
        run_cfg = TrainConfig(
            epochs=epochs,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            seed=cfg.seed,
            input_width=cfg.input_width,
            input_height=cfg.input_height,
            input_channels=cfg.input_channels,
            num_classes=cfg.num_classes,
        )
        _, trace = train(train_pairs, val_pairs, run_cfg)
        rows.append((epochs, trace.val_accuracy[-1][1]))
    best = max(acc for _, acc in rows)
    recommended = min(epochs for epochs, acc in rows if acc >= best - 0.005 - 1e-12)
    return SweepResult(tuple(rows), recommended)


def write_loss_csv(trace: LossTrace, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["epoch", "iteration", "loss"])
        for epoch, iteration, loss in trace.batch_losses:
            writer.writerow([epoch, iteration, repr(loss)])


def write_val_csv(trace: LossTrace, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["epoch", "val_accuracy"])
        for epoch, accuracy in trace.val_accuracy:
            writer.writerow([epoch, repr(accuracy)])


def load_labeled_images(manifest: DatasetManifest, base_dir: str | Path) -> list[LabeledImage]:
    """Load every manifest record's image, resolving paths against base_dir."""
    base = Path(base_dir)
    return [(load_image(base / record.image_path), record.label) for record in manifest.records]
