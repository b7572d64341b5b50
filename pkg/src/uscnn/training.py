"""Sparse objective, exact backpropagation, RMSprop, and the training loop.

The objective is L = f1 + f2 - k * f3 where f1/f2 are the mean absolute
values of the two branch maps and f3 the mean absolute value of the fused
map.  Minimizing L drives the branch responses toward zero while the -k*f3
term keeps the fused response away from zero, so after training the fused
map separates changed from unchanged pixels.

Training is full-batch: one gradient step per epoch over the whole image
pair.  There is deliberately no divergence guard; the objective is unbounded
below in principle and the fixed epoch budget is the only brake, so the loss
history is always returned for inspection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .network import (
    ForwardTrace,
    GradientSet,
    KernelBank,
    UscnnParams,
    forward,
    init_params,
)
from .tensor_core import (
    as_image,
    conv_bank_backward,
    require_same_shape,
    softplus_grad,
)

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Hyperparameters of one training run.  Defaults follow the method's
    published protocol: k = 30, lr = 0.01, 100 epochs, 20 kernels per branch."""

    k: float = 30.0
    epochs: int = 100
    learning_rate: float = 0.01
    n_kernels: int = 20
    seed: int = 0
    rms_decay: float = 0.9
    rms_epsilon: float = 1e-8

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 < self.rms_decay < 1.0:
            raise ValueError(f"rms_decay must lie in (0, 1), got {self.rms_decay}")


@dataclass
class LossReport:
    """Per-epoch loss terms; total = f1 + f2 - k * f3 for the config's k."""

    f1: float
    f2: float
    f3: float
    total: float


def loss(trace: ForwardTrace, k: float) -> LossReport:
    """Evaluate the sparse objective on a forward trace."""
    f1 = float(np.mean(np.abs(trace.c3)))
    f2 = float(np.mean(np.abs(trace.c5)))
    f3 = float(np.mean(np.abs(trace.m)))
    return LossReport(f1, f2, f3, f1 + f2 - k * f3)


def _branch_backward(bank: KernelBank, i1, i2, z1, z2, s, fuse_pre, c_map,
                     final_weight: float, d_zm: np.ndarray, npix: int) -> KernelBank:
    # dL/dC: direct mean-|C| term plus the path through the final fusion.
    d_c = np.sign(c_map) / npix + final_weight * d_zm
    d_zc = d_c * softplus_grad(fuse_pre)
    g_fuse_w = np.einsum("ij,nij->n", d_zc, s)
    g_fuse_b = float(d_zc.sum())
    d_s = bank.fuse_weights[:, None, None] * d_zc[None]
    d_z1 = d_s * softplus_grad(z1)
    d_z2 = -d_s * softplus_grad(z2)
    gk1, gb1 = conv_bank_backward(i1, bank.scale, d_z1)
    gk2, gb2 = conv_bank_backward(i2, bank.scale, d_z2)
    return KernelBank(bank.scale, gk1 + gk2, gb1 + gb2, g_fuse_w, g_fuse_b)


def backward(params: UscnnParams, trace: ForwardTrace, i1: np.ndarray,
             i2: np.ndarray, k: float) -> GradientSet:
    """Exact gradient of the sparse objective with respect to every parameter.

    Uses subgradient 0 for |x| at x = 0 (np.sign).  The trace must come from
    forward(params, i1, i2); shapes are checked, values are trusted.
    """
    i1 = as_image(i1, "i1")
    i2 = as_image(i2, "i2")
    require_same_shape(i1, i2)
    if trace.m.shape != i1.shape:
        raise ValueError(
            f"trace shape {trace.m.shape} does not match images {i1.shape}"
        )
    if trace.s3.shape[0] != params.n_kernels:
        raise ValueError("trace kernel count does not match params")
    npix = trace.m.size

    d_m = (-k / npix) * np.sign(trace.m)
    d_zm = d_m * softplus_grad(trace.final_pre)
    g_final_w = np.array([float((d_zm * trace.c3).sum()),
                          float((d_zm * trace.c5).sum())])
    g_final_b = float(d_zm.sum())

    g3 = _branch_backward(params.branch3, i1, i2, trace.z1_3, trace.z2_3,
                          trace.s3, trace.fuse_pre3, trace.c3,
                          params.final_weights[0], d_zm, npix)
    g5 = _branch_backward(params.branch5, i1, i2, trace.z1_5, trace.z2_5,
                          trace.s5, trace.fuse_pre5, trace.c5,
                          params.final_weights[1], d_zm, npix)
    return UscnnParams(g3, g5, g_final_w, g_final_b)


def rmsprop_update(vec: np.ndarray, grad: np.ndarray, acc: np.ndarray,
                   lr: float, decay: float, epsilon: float
                   ) -> tuple[np.ndarray, np.ndarray]:
    """One RMSprop step on flat vectors: acc <- decay*acc + (1-decay)*g^2,
    theta <- theta - lr*g / (sqrt(acc) + epsilon)."""
    acc = decay * acc + (1.0 - decay) * grad**2
    return vec - lr * grad / (np.sqrt(acc) + epsilon), acc


def rmsprop_step(params: UscnnParams, grads: GradientSet, state: np.ndarray,
                 lr: float, decay: float, epsilon: float
                 ) -> tuple[UscnnParams, np.ndarray]:
    """Apply one RMSprop step to a structured parameter set.

    state is the per-parameter squared-gradient accumulator in to_vector
    order; pass zeros on the first call.
    """
    new_vec, new_state = rmsprop_update(
        params.to_vector(), grads.to_vector(), state, lr, decay, epsilon
    )
    return params.with_vector(new_vec), new_state


def preprocess(raw: np.ndarray) -> np.ndarray:
    """log(x + 1) then min-max rescale to [0, 1]; a constant image maps to zeros."""
    raw = as_image(raw)
    if np.any(raw < 0):
        raise ValueError("image contains negative intensities")
    x = np.log1p(raw)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


@dataclass
class TrainResult:
    params: UscnnParams
    difference_map: np.ndarray
    history: list[LossReport] = field(default_factory=list)


def train(i1_raw: np.ndarray, i2_raw: np.ndarray, config: TrainConfig) -> TrainResult:
    """Train on one raw image pair and return the final |m| difference map.

    Runs exactly config.epochs full-image RMSprop steps; the loss history has
    one entry per epoch, evaluated at the parameters before that epoch's
    update.  Deterministic for a fixed seed and config.
    """
    i1_raw = as_image(i1_raw, "i1")
    i2_raw = as_image(i2_raw, "i2")
    require_same_shape(i1_raw, i2_raw)
    x1 = preprocess(i1_raw)
    x2 = preprocess(i2_raw)

    params = init_params(config.n_kernels, config.seed)
    state = np.zeros(params.num_params)
    history: list[LossReport] = []
    for epoch in range(config.epochs):
        trace = forward(params, x1, x2)
        report = loss(trace, config.k)
        history.append(report)
        grads = backward(params, trace, x1, x2, config.k)
        params, state = rmsprop_step(params, grads, state,
                                     config.learning_rate, config.rms_decay,
                                     config.rms_epsilon)
        logger.debug("epoch %d: f1=%.6f f2=%.6f f3=%.6f total=%.6f",
                     epoch, report.f1, report.f2, report.f3, report.total)

    final_trace = forward(params, x1, x2)
    return TrainResult(params, np.abs(final_trace.m), history)
