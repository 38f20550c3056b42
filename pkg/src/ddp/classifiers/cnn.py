"""Small convolutional network for image classification, written on numpy
with hand-derived gradients so training is bit-reproducible per seed and
the backward pass can be checked against finite differences.

Architecture: repeated [3x3 conv (same padding) -> ReLU -> 2x2 max-pool]
blocks, then a ReLU dense layer and a sigmoid output trained with binary
cross-entropy under Adam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DataError, NumericError
from .common import Prediction, sigmoid


@dataclass(frozen=True)
class CNNConfig:
    input_size: int = 64
    in_channels: int = 3
    conv_channels: tuple[int, ...] = (32, 64, 128, 128)
    kernel_size: int = 3
    dense_units: int = 128
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 5
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        size = self.input_size
        for _ in self.conv_channels:
            if size % 2 != 0:
                raise DataError(f"input_size {self.input_size} does not survive "
                                f"{len(self.conv_channels)} rounds of 2x2 pooling")
            size //= 2
        if self.kernel_size % 2 != 1:
            raise DataError("kernel_size must be odd (same padding)")


class _Conv2D:
    def __init__(self, in_ch, out_ch, k, rng, dtype):
        scale = np.sqrt(2.0 / (k * k * in_ch))
        self.W = (rng.standard_normal((out_ch, k, k, in_ch)) * scale).astype(dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.k = k
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    def forward(self, x):
        n, h, w, c = x.shape
        p = self.k // 2
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        windows = np.lib.stride_tricks.sliding_window_view(xp, (self.k, self.k), axis=(1, 2))
        # (n, h, w, c, k, k) -> rows ordered [k, k, c] to match W
        self._cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(n * h * w, -1)
        self._shape = (n, h, w, c)
        wf = self.W.reshape(self.W.shape[0], -1)
        out = self._cols @ wf.T + self.b
        return out.reshape(n, h, w, -1)

    def backward(self, dout):
        n, h, w, c = self._shape
        out_ch = self.W.shape[0]
        dflat = dout.reshape(-1, out_ch)
        self.dW = (dflat.T @ self._cols).reshape(self.W.shape)
        self.db = dflat.sum(axis=0)
        dcols = (dflat @ self.W.reshape(out_ch, -1)).reshape(n, h, w, self.k, self.k, c)
        p = self.k // 2
        dxp = np.zeros((n, h + 2 * p, w + 2 * p, c), dtype=dout.dtype)
        for di in range(self.k):
            for dj in range(self.k):
                dxp[:, di:di + h, dj:dj + w, :] += dcols[:, :, :, di, dj, :]
        return dxp[:, p:p + h, p:p + w, :]

    def params(self):
        return [(self.W, lambda: self.dW), (self.b, lambda: self.db)]


class _ReLU:
    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask

    def params(self):
        return []


class _MaxPool2x2:
    def forward(self, x):
        n, h, w, c = x.shape
        r = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4)
        r = r.reshape(n, h // 2, w // 2, c, 4)
        self._idx = r.argmax(axis=-1)
        self._shape = (n, h, w, c)
        return np.take_along_axis(r, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        n, h, w, c = self._shape
        dr = np.zeros((n, h // 2, w // 2, c, 4), dtype=dout.dtype)
        np.put_along_axis(dr, self._idx[..., None], dout[..., None], axis=-1)
        dr = dr.reshape(n, h // 2, w // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
        return dr.reshape(n, h, w, c)

    def params(self):
        return []


class _Flatten:
    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)

    def params(self):
        return []


class _Dense:
    def __init__(self, n_in, n_out, rng, dtype):
        scale = np.sqrt(2.0 / n_in)
        self.W = (rng.standard_normal((n_in, n_out)) * scale).astype(dtype)
        self.b = np.zeros(n_out, dtype=dtype)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    def forward(self, x):
        self._x = x
        return x @ self.W + self.b

    def backward(self, dout):
        self.dW = self._x.T @ dout
        self.db = dout.sum(axis=0)
        return dout @ self.W.T

    def params(self):
        return [(self.W, lambda: self.dW), (self.b, lambda: self.db)]


class CNNNetwork:
    """Layer stack ending in a single logit; loss is BCE on the logit."""

    def __init__(self, config: CNNConfig):
        rng = np.random.default_rng(config.seed)
        dtype = np.dtype(config.dtype)
        self.config = config
        self.layers = []
        ch = config.in_channels
        size = config.input_size
        for out_ch in config.conv_channels:
            self.layers.append(_Conv2D(ch, out_ch, config.kernel_size, rng, dtype))
            self.layers.append(_ReLU())
            self.layers.append(_MaxPool2x2())
            ch = out_ch
            size //= 2
        self.layers.append(_Flatten())
        self.layers.append(_Dense(size * size * ch, config.dense_units, rng, dtype))
        self.layers.append(_ReLU())
        self.layers.append(_Dense(config.dense_units, 1, rng, dtype))

    def forward(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(x, dtype=self.config.dtype)
        for layer in self.layers:
            out = layer.forward(out)
        return out[:, 0]  # logits

    def loss_and_backward(self, x: np.ndarray, y: np.ndarray) -> float:
        """BCE loss on logits; leaves parameter gradients on the layers."""
        logits = self.forward(x)
        y = np.asarray(y, dtype=np.float64)
        loss = float(np.mean(np.logaddexp(0.0, logits.astype(np.float64)) - y * logits))
        dlogits = ((sigmoid(logits) - y) / len(y)).astype(self.config.dtype)
        grad = dlogits[:, None]
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return loss

    def parameters(self):
        """(array, grad_getter) pairs in a fixed order."""
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p, _ in params]
        self.v = [np.zeros_like(p) for p, _ in params]
        self.t = 0

    def step(self):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for i, (p, grad_fn) in enumerate(self.params):
            g = grad_fn()
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            p -= (self.lr * (self.m[i] / b1t)
                  / (np.sqrt(self.v[i] / b2t) + self.eps)).astype(p.dtype)


@dataclass(frozen=True)
class CNNModel:
    network: CNNNetwork
    config: CNNConfig
    epoch_losses: tuple[float, ...]


def cnn_train(images: np.ndarray, labels: np.ndarray, config: CNNConfig) -> CNNModel:
    """Minimize BCE with Adam; batch order is a pure function of the seed."""
    images = np.asarray(images)
    labels = np.asarray(labels, dtype=np.float64)
    expected = (config.input_size, config.input_size, config.in_channels)
    if images.ndim != 4 or images.shape[1:] != expected:
        raise ContractError(f"images of shape {images.shape}, expected (N, {expected})")
    if len(images) != len(labels):
        raise ContractError("images/labels length mismatch")
    if len(np.unique(labels)) < 2:
        raise DataError("cnn_train needs both classes present")

    net = CNNNetwork(config)
    rng = np.random.default_rng(config.seed + 1)  # separate stream from init
    adam = _Adam(net.parameters(), config.learning_rate)
    epoch_losses = []
    for _ in range(config.epochs):
        order = rng.permutation(len(images))
        losses = []
        for start in range(0, len(images), config.batch_size):
            batch = order[start:start + config.batch_size]
            loss = net.loss_and_backward(images[batch], labels[batch])
            if not np.isfinite(loss):
                raise NumericError("non-finite CNN training loss")
            adam.step()
            losses.append(loss)
        epoch_losses.append(float(np.mean(losses)))
    return CNNModel(network=net, config=config, epoch_losses=tuple(epoch_losses))


def cnn_scores(model: CNNModel, images: np.ndarray) -> np.ndarray:
    """Sigmoid outputs clipped into the open interval (0, 1)."""
    images = np.asarray(images)
    if images.ndim == 3:
        images = images[None]
    scores = sigmoid(model.network.forward(images))
    return np.clip(scores, 1e-12, 1.0 - 1e-12)


def cnn_predict(model: CNNModel, image: np.ndarray, unit_id: str = "") -> Prediction:
    return Prediction(unit_id=unit_id, score=float(cnn_scores(model, image)[0]))
