"""Small convolutional network with hand-written forward and backward passes.

Architecture: two blocks of (3x3 convolution, stride 1, zero padding 1,
ReLU, 2x2 max-pool stride 2), then one fully connected layer to the class
logits, softmax readout.  Everything runs in float64 so training is
bit-reproducible for a fixed seed and finite-difference gradient checks are
meaningful.

Weight layout: convolution weights are stored as (9 * in_channels, filters)
matrices whose rows follow (ky, kx, channel) order; biases start at zero.
Initial weights are uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], drawn
element by element in row-major order from the pinned generator in
:mod:`pavesize.rng` (conv1 weights first, then conv2, then the fully
connected layer).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .rng import XorShift64Star

CONV1_FILTERS = 8
CONV2_FILTERS = 16


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilised by subtracting the row maximum."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=-1, keepdims=True)


def cross_entropy_mean(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy of integer labels, via log-sum-exp."""
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    picked = logits[np.arange(logits.shape[0]), labels]
    return float((lse - picked).mean())


@dataclass
class ConvNet:
    class_names: tuple[str, ...]
    input_height: int
    input_width: int
    input_channels: int
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    fc_w: np.ndarray
    fc_b: np.ndarray

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("conv1_w", self.conv1_w),
            ("conv1_b", self.conv1_b),
            ("conv2_w", self.conv2_w),
            ("conv2_b", self.conv2_b),
            ("fc_w", self.fc_w),
            ("fc_b", self.fc_b),
        ]

    @classmethod
    def initialize(
        cls,
        class_names: Sequence[str],
        input_height: int,
        input_width: int,
        input_channels: int,
        rng: XorShift64Star,
    ) -> "ConvNet":
        if input_height < 4 or input_width < 4:
            raise ValueError("input must be at least 4x4 to survive two pooling stages")
        if input_channels not in (1, 3):
            raise ValueError("input_channels must be 1 or 3")
        if len(class_names) < 2:
            raise ValueError("need at least 2 classes")
        flat = (input_height // 4) * (input_width // 4) * CONV2_FILTERS
        return cls(
            class_names=tuple(class_names),
            input_height=input_height,
            input_width=input_width,
            input_channels=input_channels,
            conv1_w=_init_matrix(rng, 9 * input_channels, CONV1_FILTERS),
            conv1_b=np.zeros(CONV1_FILTERS),
            conv2_w=_init_matrix(rng, 9 * CONV1_FILTERS, CONV2_FILTERS),
            conv2_b=np.zeros(CONV2_FILTERS),
            fc_w=_init_matrix(rng, flat, len(class_names)),
            fc_b=np.zeros(len(class_names)),
        )

    def save(self, path: str | Path) -> None:
        np.savez(
            Path(path),
            format_version=np.array([1]),
            class_names=np.array(self.class_names),
            dims=np.array([self.input_height, self.input_width, self.input_channels]),
            conv1_w=self.conv1_w,
            conv1_b=self.conv1_b,
            conv2_w=self.conv2_w,
            conv2_b=self.conv2_b,
            fc_w=self.fc_w,
            fc_b=self.fc_b,
        )

    @classmethod
    def load(cls, path: str | Path) -> "ConvNet":
        with np.load(Path(path), allow_pickle=False) as data:
            dims = data["dims"]
            return cls(
                class_names=tuple(str(name) for name in data["class_names"]),
                input_height=int(dims[0]),
                input_width=int(dims[1]),
                input_channels=int(dims[2]),
                conv1_w=data["conv1_w"],
                conv1_b=data["conv1_b"],
                conv2_w=data["conv2_w"],
                conv2_b=data["conv2_b"],
                fc_w=data["fc_w"],
                fc_b=data["fc_b"],
            )


def _init_matrix(rng: XorShift64Star, fan_in: int, fan_out: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    values = [rng.uniform(-bound, bound) for _ in range(fan_in * fan_out)]
    return np.array(values).reshape(fan_in, fan_out)


def _conv_forward(x, w, b):
    batch, height, width, channels = x.shape
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    windows = sliding_window_view(padded, (3, 3), axis=(1, 2))
    cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(batch, height, width, 9 * channels)
    return cols @ w + b, cols


def _conv_backward(d_out, cols, w, x_shape):
    batch, height, width, channels = x_shape
    d_w = cols.reshape(-1, cols.shape[-1]).T @ d_out.reshape(-1, d_out.shape[-1])
    d_b = d_out.sum(axis=(0, 1, 2))
    d_cols = (d_out @ w.T).reshape(batch, height, width, 3, 3, channels)
    d_padded = np.zeros((batch, height + 2, width + 2, channels))
    for ky in range(3):
        for kx in range(3):
            d_padded[:, ky : ky + height, kx : kx + width, :] += d_cols[:, :, :, ky, kx, :]
    return d_padded[:, 1 : height + 1, 1 : width + 1, :], d_w, d_b


def _pool_forward(x):
    batch, height, width, channels = x.shape
    out_h, out_w = height // 2, width // 2
    cropped = x[:, : out_h * 2, : out_w * 2, :]
    grouped = (
        cropped.reshape(batch, out_h, 2, out_w, 2, channels)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(batch, out_h, out_w, 4, channels)
    )
    # argmax takes the first maximum, which fixes gradient routing at ties
    winners = grouped.argmax(axis=3)
    pooled = np.take_along_axis(grouped, winners[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return pooled, (winners, x.shape)


def _pool_backward(d_out, cache):
    winners, x_shape = cache
    batch, height, width, channels = x_shape
    out_h, out_w = height // 2, width // 2
    d_grouped = np.zeros((batch, out_h, out_w, 4, channels))
    np.put_along_axis(d_grouped, winners[:, :, :, None, :], d_out[:, :, :, None, :], axis=3)
    d_cropped = (
        d_grouped.reshape(batch, out_h, out_w, 2, 2, channels)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(batch, out_h * 2, out_w * 2, channels)
    )
    if out_h * 2 == height and out_w * 2 == width:
        return d_cropped
    d_x = np.zeros(x_shape)
    d_x[:, : out_h * 2, : out_w * 2, :] = d_cropped
    return d_x


def _forward(net: ConvNet, x: np.ndarray):
    z1, cols1 = _conv_forward(x, net.conv1_w, net.conv1_b)
    a1 = np.maximum(z1, 0.0)
    p1, pool1 = _pool_forward(a1)
    z2, cols2 = _conv_forward(p1, net.conv2_w, net.conv2_b)
    a2 = np.maximum(z2, 0.0)
    p2, pool2 = _pool_forward(a2)
    flat = p2.reshape(x.shape[0], -1)
    logits = flat @ net.fc_w + net.fc_b
    cache = (x, z1, cols1, pool1, p1, z2, cols2, pool2, flat)
    return logits, cache


def forward_logits(net: ConvNet, x: np.ndarray) -> np.ndarray:
    """Logits for a batch shaped (batch, height, width, channels) in [0, 1]."""
    if x.ndim != 4 or x.shape[1:] != (net.input_height, net.input_width, net.input_channels):
        raise ValueError(
            f"expected batch of shape (N, {net.input_height}, {net.input_width}, "
            f"{net.input_channels}), got {x.shape}"
        )
    logits, _ = _forward(net, np.asarray(x, dtype=np.float64))
    return logits


def predict_scores(net: ConvNet, x: np.ndarray) -> np.ndarray:
    return softmax(forward_logits(net, x))


def loss_and_gradients(net: ConvNet, x: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch and gradients for every parameter."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    logits, cache = _forward(net, x)
    x_in, z1, cols1, pool1, p1, z2, cols2, pool2, flat = cache
    batch = x.shape[0]
    loss = cross_entropy_mean(logits, labels)

    d_logits = softmax(logits)
    d_logits[np.arange(batch), labels] -= 1.0
    d_logits /= batch

    d_fc_w = flat.T @ d_logits
    d_fc_b = d_logits.sum(axis=0)
    d_flat = d_logits @ net.fc_w.T
    d_p2 = d_flat.reshape(batch, net.input_height // 4, net.input_width // 4, CONV2_FILTERS)
    d_a2 = _pool_backward(d_p2, pool2)
    d_z2 = d_a2 * (z2 > 0.0)
    d_p1, d_conv2_w, d_conv2_b = _conv_backward(d_z2, cols2, net.conv2_w, p1.shape)
    d_a1 = _pool_backward(d_p1, pool1)
    d_z1 = d_a1 * (z1 > 0.0)
    _, d_conv1_w, d_conv1_b = _conv_backward(d_z1, cols1, net.conv1_w, x_in.shape)

    grads = {
        "conv1_w": d_conv1_w,
        "conv1_b": d_conv1_b,
        "conv2_w": d_conv2_w,
        "conv2_b": d_conv2_b,
        "fc_w": d_fc_w,
        "fc_b": d_fc_b,
    }
    return loss, grads


def gradient_check(net: ConvNet, sample: np.ndarray, label_index: int, step: float = 1e-4) -> float:
    """Compare analytic gradients against central finite differences.

    Perturbs every parameter entry by +/- step on the single-sample loss and
    returns the maximum relative error, with the denominator floored at
    max(|analytic|, |numeric|, 1e-8).
    """
    x = np.asarray(sample, dtype=np.float64)[None, ...]
    labels = np.array([label_index])
    _, grads = loss_and_gradients(net, x, labels)
    worst = 0.0
    for name, param in net.parameters():
        analytic = grads[name]
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            original = param[idx]
            param[idx] = original + step
            loss_plus = cross_entropy_mean(*_single_loss_args(net, x, labels))
            param[idx] = original - step
            loss_minus = cross_entropy_mean(*_single_loss_args(net, x, labels))
            param[idx] = original
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            denom = max(abs(analytic[idx]), abs(numeric), 1e-8)
            worst = max(worst, abs(analytic[idx] - numeric) / denom)
            it.iternext()
    return worst


def _single_loss_args(net, x, labels):
    logits, _ = _forward(net, x)
    return logits, labels
