"""Dense 2-D array primitives: same-size convolution, softplus, and their gradients.

Everything here operates on plain float64 numpy arrays of shape (rows, cols).
Convolution is cross-correlation (no kernel flip) over a zero-padded input,
and the per-pixel reduction order is fixed (row-major over the kernel window)
so results are bitwise reproducible and match a naive double-loop exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_image(x, name: str = "image") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting anything else."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    return arr


def require_same_shape(a: np.ndarray, b: np.ndarray, what: str = "images") -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what} must have identical dimensions: {a.shape} vs {b.shape}")


@dataclass
class Kernel:
    """A square convolution kernel with a scalar bias.

    The side length must be odd so the kernel has a well-defined center for
    same-size convolution.
    """

    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.weights.shape[1]:
            raise ValueError(f"kernel weights must be square, got shape {self.weights.shape}")
        if self.weights.shape[0] % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {self.weights.shape[0]}")
        self.bias = float(self.bias)

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def _pad_zeros(image: np.ndarray, pad: int) -> np.ndarray:
    rows, cols = image.shape
    padded = np.zeros((rows + 2 * pad, cols + 2 * pad))
    padded[pad:pad + rows, pad:pad + cols] = image
    return padded


def conv_bank(image: np.ndarray, kernels: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """Apply a stack of same-sized kernels to one image in a single pass.

    kernels has shape (n, k, k) and biases shape (n,); the result has shape
    (n, rows, cols).  Accumulation walks the kernel window in row-major order,
    so row i of the output is bitwise identical to conv2d_same with kernel i.
    """
    rows, cols = image.shape
    n, k, _ = kernels.shape
    pad = k // 2
    padded = _pad_zeros(image, pad)
    out = np.zeros((n, rows, cols))
    for u in range(k):
        for v in range(k):
            out += kernels[:, u, v][:, None, None] * padded[u:u + rows, v:v + cols]
    out += biases[:, None, None]
    return out


def conv2d_same(image: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Same-size cross-correlation of a zero-padded image with one kernel.

    output[i, j] = sum_{u, v} weights[u, v] * padded[i + u, j + v] + bias,
    accumulated in row-major (u, v) order.
    """
    image = as_image(image)
    k = kernel.size
    if k > min(image.shape):
        raise ValueError(
            f"kernel size {k} exceeds smallest image dimension {min(image.shape)}"
        )
    return conv_bank(image, kernel.weights[None], np.array([kernel.bias]))[0]


def conv_bank_backward(image: np.ndarray, kernel_size: int,
                       upstreams: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kernel-weight and bias gradients for a conv_bank application.

    Returns (grad_kernels, grad_biases) with shapes (n, k, k) and (n,).
    """
    rows, cols = image.shape
    n = upstreams.shape[0]
    k = kernel_size
    pad = k // 2
    padded = _pad_zeros(image, pad)
    grad_kernels = np.zeros((n, k, k))
    for u in range(k):
        for v in range(k):
            grad_kernels[:, u, v] = np.sum(
                upstreams * padded[u:u + rows, v:v + cols], axis=(1, 2)
            )
    grad_biases = upstreams.sum(axis=(1, 2))
    return grad_kernels, grad_biases


def conv2d_backward(image: np.ndarray, kernel: Kernel,
                    upstream: np.ndarray) -> tuple[np.ndarray, Kernel]:
    """Gradients of conv2d_same with respect to its input and its kernel.

    Given upstream = dL/d(output), returns (grad_input, grad_kernel) where
    grad_kernel.weights[u, v] = sum_{i,j} upstream[i, j] * padded[i+u, j+v],
    grad_kernel.bias = sum(upstream), and grad_input is the same-size
    cross-correlation of upstream with the 180-degree-rotated kernel.
    """
    image = as_image(image)
    upstream = as_image(upstream, "upstream")
    require_same_shape(image, upstream, "input and upstream")
    grad_kernels, grad_biases = conv_bank_backward(image, kernel.size, upstream[None])
    grad_kernel = Kernel(grad_kernels[0], float(grad_biases[0]))
    rotated = Kernel(kernel.weights[::-1, ::-1].copy(), 0.0)
    grad_input = conv2d_same(upstream, rotated)
    return grad_input, grad_kernel


def softplus(x: np.ndarray) -> np.ndarray:
    """Elementwise ln(1 + e^x), overflow-safe for large |x|."""
    return np.logaddexp(0.0, x)


def softplus_grad(x: np.ndarray) -> np.ndarray:
    """Derivative of softplus: the logistic sigmoid 1 / (1 + e^-x)."""
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
