"""Two-branch shared-weight convolutional network producing a fused change map.

Each branch convolves both input images with N shared kernels (3x3 for one
branch, 5x5 for the other), applies softplus, subtracts the two activation
stacks pixelwise, collapses the N channels with a learned 1x1 fusion, and the
two branch maps are fused by a final 1x1 layer into a single map m.  All
activations are softplus, so every activated map is strictly positive and the
whole pipeline is smooth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_core import as_image, conv_bank, require_same_shape, softplus

BRANCH_SCALES = (3, 5)


@dataclass
class KernelBank:
    """Learnable parameters of one branch: N conv kernels plus a 1x1 fusion."""

    scale: int
    kernels: np.ndarray       # (n, scale, scale)
    biases: np.ndarray        # (n,)
    fuse_weights: np.ndarray  # (n,)
    fuse_bias: float

    def __post_init__(self):
        self.kernels = np.asarray(self.kernels, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        self.fuse_weights = np.asarray(self.fuse_weights, dtype=np.float64)
        self.fuse_bias = float(self.fuse_bias)
        n = self.kernels.shape[0]
        if self.kernels.shape != (n, self.scale, self.scale):
            raise ValueError(
                f"kernels must have shape (n, {self.scale}, {self.scale}), "
                f"got {self.kernels.shape}"
            )
        if self.biases.shape != (n,) or self.fuse_weights.shape != (n,):
            raise ValueError("biases and fuse_weights must each have one entry per kernel")

    @property
    def n_kernels(self) -> int:
        return self.kernels.shape[0]


@dataclass
class UscnnParams:
    """Every parameter the optimizer updates: both branches plus the final fusion."""

    branch3: KernelBank
    branch5: KernelBank
    final_weights: np.ndarray  # (2,): weight on branch-3 map, weight on branch-5 map
    final_bias: float

    def __post_init__(self):
        self.final_weights = np.asarray(self.final_weights, dtype=np.float64)
        self.final_bias = float(self.final_bias)
        if self.branch3.scale != 3 or self.branch5.scale != 5:
            raise ValueError("branch3 must have scale 3 and branch5 scale 5")
        if self.branch3.n_kernels != self.branch5.n_kernels:
            raise ValueError("both branches must share the same kernel count")
        if self.final_weights.shape != (2,):
            raise ValueError("final_weights must hold exactly two values")

    @property
    def n_kernels(self) -> int:
        return self.branch3.n_kernels

    def to_vector(self) -> np.ndarray:
        """Flatten all parameters into one vector (fixed, documented order)."""
        parts = []
        for bank in (self.branch3, self.branch5):
            parts.extend([bank.kernels.ravel(), bank.biases,
                          bank.fuse_weights, [bank.fuse_bias]])
        parts.extend([self.final_weights, [self.final_bias]])
        return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])

    def with_vector(self, vec: np.ndarray) -> "UscnnParams":
        """Rebuild a structurally identical parameter set from a flat vector."""
        vec = np.asarray(vec, dtype=np.float64)
        banks = []
        pos = 0
        for bank in (self.branch3, self.branch5):
            n, k = bank.n_kernels, bank.scale
            kernels = vec[pos:pos + n * k * k].reshape(n, k, k).copy()
            pos += n * k * k
            biases = vec[pos:pos + n].copy()
            pos += n
            fuse_w = vec[pos:pos + n].copy()
            pos += n
            fuse_b = vec[pos]
            pos += 1
            banks.append(KernelBank(k, kernels, biases, fuse_w, fuse_b))
        final_w = vec[pos:pos + 2].copy()
        final_b = vec[pos + 2]
        if pos + 3 != vec.size:
            raise ValueError(f"vector length {vec.size} does not match parameter count")
        return UscnnParams(banks[0], banks[1], final_w, final_b)

    @property
    def num_params(self) -> int:
        n = self.n_kernels
        return n * 9 + n * 25 + 4 * n + 2 + 3


# Gradients and optimizer state mirror the parameter structure exactly, so they
# reuse the same container type.
GradientSet = UscnnParams


@dataclass
class ForwardTrace:
    """All intermediate maps of one forward pass, kept for exact gradient replay.

    z* arrays are pre-activation conv outputs of shape (n, rows, cols); s* are
    the per-kernel subtraction maps; fuse_pre*/final_pre are pre-activations of
    the 1x1 fusions; c3/c5/m are the activated branch and final maps.
    """

    z1_3: np.ndarray
    z2_3: np.ndarray
    s3: np.ndarray
    fuse_pre3: np.ndarray
    c3: np.ndarray
    z1_5: np.ndarray
    z2_5: np.ndarray
    s5: np.ndarray
    fuse_pre5: np.ndarray
    c5: np.ndarray
    final_pre: np.ndarray
    m: np.ndarray


def glorot_uniform(rng: np.random.Generator, shape: tuple, fan_in: int,
                   fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(n_kernels: int, seed: int) -> UscnnParams:
    """Glorot-uniform kernels and fusion weights, zero biases, seeded rng."""
    if n_kernels < 1:
        raise ValueError(f"n_kernels must be >= 1, got {n_kernels}")
    rng = np.random.default_rng(seed)
    banks = []
    for scale in BRANCH_SCALES:
        fan_in = scale * scale
        fan_out = n_kernels * scale * scale
        kernels = glorot_uniform(rng, (n_kernels, scale, scale), fan_in, fan_out)
        fuse_w = glorot_uniform(rng, (n_kernels,), n_kernels, 1)
        banks.append(KernelBank(scale, kernels, np.zeros(n_kernels), fuse_w, 0.0))
    final_w = glorot_uniform(rng, (2,), 2, 1)
    return UscnnParams(banks[0], banks[1], final_w, 0.0)


def _branch_forward(bank: KernelBank, i1: np.ndarray, i2: np.ndarray):
    z1 = conv_bank(i1, bank.kernels, bank.biases)
    z2 = conv_bank(i2, bank.kernels, bank.biases)
    s = softplus(z1) - softplus(z2)
    fuse_pre = np.einsum("n,nij->ij", bank.fuse_weights, s) + bank.fuse_bias
    return z1, z2, s, fuse_pre, softplus(fuse_pre)


def forward(params: UscnnParams, i1: np.ndarray, i2: np.ndarray) -> ForwardTrace:
    """Run the full network on one preprocessed image pair."""
    i1 = as_image(i1, "i1")
    i2 = as_image(i2, "i2")
    require_same_shape(i1, i2)
    z1_3, z2_3, s3, fuse_pre3, c3 = _branch_forward(params.branch3, i1, i2)
    z1_5, z2_5, s5, fuse_pre5, c5 = _branch_forward(params.branch5, i1, i2)
    final_pre = (params.final_weights[0] * c3 + params.final_weights[1] * c5
                 + params.final_bias)
    m = softplus(final_pre)
    return ForwardTrace(z1_3, z2_3, s3, fuse_pre3, c3,
                        z1_5, z2_5, s5, fuse_pre5, c5,
                        final_pre, m)
