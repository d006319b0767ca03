"""
Numeric kernels for AMOS-VPR

Forward and backward passes for convolution, ReLU, max-pooling, fully
connected layers and softmax/cross-entropy on single images. A Tensor3 is a
``numpy.ndarray`` of shape (channels, height, width), channel-major and
row-major. Every kernel keeps the dtype of its inputs, so float32 is used for
storage and training while float64 inputs give the double-precision checking
mode used by gradient checks. No kernel mutates its inputs.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.errors import ShapeError

Tensor3 = np.ndarray

LOSS_FLOOR = 1e-12


@dataclass(frozen=True)
class ConvKernelBank:
    """Square convolution kernels (out, in, k, k) and one bias per output map"""
    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 4 or self.weights.shape[2] != self.weights.shape[3]:
            raise ShapeError(f"kernel bank weights must be (out, in, k, k), got {self.weights.shape}")
        if self.biases.shape != (self.weights.shape[0],):
            raise ShapeError.mismatch("kernel bank biases", (self.weights.shape[0],), self.biases.shape)

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_size(self) -> int:
        return self.weights.shape[2]


@dataclass(frozen=True)
class PoolIndexMap:
    """Flat input index of the winning cell for every pooled output"""
    indices: np.ndarray
    input_shape: Tuple[int, int, int]
    window: int
    stride: int

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.indices.shape


def _check_tensor3(x: np.ndarray, what: str):
    if not isinstance(x, np.ndarray) or x.ndim != 3:
        raise ShapeError(f"{what} must be a (channels, height, width) array, got {getattr(x, 'shape', type(x))}")


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def pool_output_size(size: int, window: int, stride: int) -> int:
    return (size - window) // stride + 1


def _conv_windows(x: Tensor3, k: int, stride: int, pad: int) -> np.ndarray:
    """(C, Ho, Wo, k, k) view of every receptive window"""
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    return sliding_window_view(x, (k, k), axis=(1, 2))[:, ::stride, ::stride]


def _check_conv(x: Tensor3, bank: ConvKernelBank, stride: int, pad: int):
    _check_tensor3(x, "conv input")
    if x.shape[0] != bank.in_channels:
        raise ShapeError(
            f"conv input {x.shape} does not match kernel bank {bank.weights.shape}: "
            f"{x.shape[0]} input channels vs {bank.in_channels}"
        )
    if stride < 1 or pad < 0:
        raise ShapeError(f"conv stride must be >= 1 and pad >= 0, got stride={stride} pad={pad}")
    h = conv_output_size(x.shape[1], bank.kernel_size, stride, pad)
    w = conv_output_size(x.shape[2], bank.kernel_size, stride, pad)
    if h < 1 or w < 1:
        raise ShapeError(
            f"conv input {x.shape} with kernel bank {bank.weights.shape}, stride {stride}, pad {pad} "
            f"gives empty output {h}x{w}"
        )


def conv2d_forward(x: Tensor3, bank: ConvKernelBank, stride: int = 1, pad: int = 0) -> Tensor3:
    """b^j + sum_i k^ij * x^i for every output map j (no activation)"""
    _check_conv(x, bank, stride, pad)
    windows = _conv_windows(x, bank.kernel_size, stride, pad)
    out = np.tensordot(bank.weights, windows, axes=([1, 2, 3], [0, 3, 4]))
    out += bank.biases[:, None, None]
    return out


def conv2d_backward(
    x: Tensor3, bank: ConvKernelBank, stride: int, pad: int, grad_out: Tensor3
) -> Tuple[Tensor3, np.ndarray, np.ndarray]:
    """Gradients w.r.t. the input, the kernels and the biases"""
    _check_conv(x, bank, stride, pad)
    k = bank.kernel_size
    c, h, w = x.shape
    ho, wo = conv_output_size(h, k, stride, pad), conv_output_size(w, k, stride, pad)
    if grad_out.shape != (bank.out_channels, ho, wo):
        raise ShapeError.mismatch("conv upstream gradient", (bank.out_channels, ho, wo), grad_out.shape)

    windows = _conv_windows(x, k, stride, pad)
    grad_w = np.tensordot(grad_out, windows, axes=([1, 2], [1, 2]))
    grad_b = grad_out.sum(axis=(1, 2))

    cols = np.tensordot(bank.weights, grad_out, axes=([0], [0]))  # (C, k, k, Ho, Wo)
    grad_padded = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=np.result_type(x, bank.weights))
    for i in range(k):
        for j in range(k):
            grad_padded[:, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride] += cols[:, i, j]
    grad_x = grad_padded[:, pad:pad + h, pad:pad + w]
    return np.ascontiguousarray(grad_x), grad_w, grad_b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0).astype(x.dtype, copy=False)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Adjoint of relu at pre-activation x (gradient 0 at x == 0)"""
    if x.shape != grad_out.shape:
        raise ShapeError.mismatch("relu upstream gradient", x.shape, grad_out.shape)
    return grad_out * (x > 0)


def maxpool_forward(x: Tensor3, window: int, stride: int) -> Tuple[Tensor3, PoolIndexMap]:
    """Max over window x window regions; overhanging windows are dropped.

    Ties go to the smallest flat input index, i.e. the first cell of the
    window in row-major order.
    """
    _check_tensor3(x, "pool input")
    c, h, w = x.shape
    if stride < 1 or window < 1:
        raise ShapeError(f"pool window and stride must be >= 1, got window={window} stride={stride}")
    if window > min(h, w):
        raise ShapeError(f"pool window {window} larger than input {x.shape}")

    ho, wo = pool_output_size(h, window, stride), pool_output_size(w, window, stride)
    windows = sliding_window_view(x, (window, window), axis=(1, 2))[:, ::stride, ::stride]
    flat = windows.reshape(c, ho, wo, window * window)
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    rows = np.arange(ho)[None, :, None] * stride + arg // window
    cols = np.arange(wo)[None, None, :] * stride + arg % window
    indices = np.arange(c)[:, None, None] * (h * w) + rows * w + cols
    return np.ascontiguousarray(out), PoolIndexMap(indices.astype(np.int64), (c, h, w), window, stride)


def maxpool_backward(grad_out: Tensor3, index_map: PoolIndexMap) -> Tensor3:
    """Route each upstream gradient to its recorded argmax; overlaps accumulate"""
    if grad_out.shape != index_map.shape:
        raise ShapeError.mismatch("pool upstream gradient", index_map.shape, grad_out.shape)
    grad_x = np.zeros(math.prod(index_map.input_shape), dtype=grad_out.dtype)
    np.add.at(grad_x, index_map.indices.ravel(), grad_out.ravel())
    return grad_x.reshape(index_map.input_shape)


def maxpool_gather(x: Tensor3, index_map: PoolIndexMap) -> Tensor3:
    """Pooled output for a fixed winner map (used with frozen activation patterns)"""
    if x.shape != index_map.input_shape:
        raise ShapeError.mismatch("pool input", index_map.input_shape, x.shape)
    return x.ravel()[index_map.indices]


def fc_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """y = W x + b"""
    if x.ndim != 1 or weights.ndim != 2 or weights.shape[1] != x.shape[0]:
        raise ShapeError(f"fc input {x.shape} does not match weights {weights.shape}")
    if bias.shape != (weights.shape[0],):
        raise ShapeError.mismatch("fc bias", (weights.shape[0],), bias.shape)
    return weights @ x + bias


def fc_backward(
    x: np.ndarray, weights: np.ndarray, grad_out: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients w.r.t. the input, the weight matrix and the bias"""
    if grad_out.shape != (weights.shape[0],) or x.shape != (weights.shape[1],):
        raise ShapeError(
            f"fc backward: input {x.shape}, weights {weights.shape}, upstream gradient {grad_out.shape}"
        )
    return weights.T @ grad_out, np.outer(grad_out, x), grad_out.copy()


def softmax(logits: np.ndarray) -> np.ndarray:
    """exp(x_j) / sum_k exp(x_k) with max subtraction"""
    if logits.ndim != 1 or logits.size == 0:
        raise ShapeError(f"softmax expects a non-empty vector, got {logits.shape}")
    z = np.exp(logits - logits.max())
    return z / z.sum()


def cross_entropy_loss(probs: np.ndarray, target: int) -> float:
    """-log(probs[target]), clamped at -log(1e-12)"""
    if not 0 <= target < probs.shape[0]:
        raise ShapeError(f"target class {target} out of range for {probs.shape[0]} classes")
    return float(-np.log(max(float(probs[target]), LOSS_FLOOR)))


def softmax_ce_backward(probs: np.ndarray, target: int) -> np.ndarray:
    """Gradient of cross_entropy_loss(softmax(logits)) w.r.t. the logits: s - onehot(t)"""
    if not 0 <= target < probs.shape[0]:
        raise ShapeError(f"target class {target} out of range for {probs.shape[0]} classes")
    grad = probs.copy()
    grad[target] -= 1
    return grad
