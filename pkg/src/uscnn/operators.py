"""Classical difference-map operators: log-ratio and the log-mean-ratio (LMR).

Both operators take raw non-negative intensity images.  Logarithms use
log(x + 1) so zero-valued pixels stay defined; the LMR neighborhood mean is a
zero-padded uniform convolution, consistent with tensor_core.
"""

from __future__ import annotations

import numpy as np

from .tensor_core import Kernel, as_image, conv2d_same, require_same_shape

RATIO_FLOOR = 1e-12


def _log_transform(image: np.ndarray, name: str) -> np.ndarray:
    image = as_image(image, name)
    if np.any(image < 0):
        raise ValueError(f"{name} contains negative intensities")
    return np.log1p(image)


def log_ratio(i1: np.ndarray, i2: np.ndarray) -> np.ndarray:
    """Absolute difference of the log-transformed images: |log(i1+1) - log(i2+1)|."""
    l1 = _log_transform(i1, "i1")
    l2 = _log_transform(i2, "i2")
    require_same_shape(l1, l2)
    return np.abs(l1 - l2)


def lmr(i1: np.ndarray, i2: np.ndarray, window: int = 3) -> np.ndarray:
    """Log-mean-ratio difference map.

    Each image is log-transformed, then mean-filtered with a uniform
    window x window kernel (zero padded); the map is |mean1 / mean2| per pixel.
    Where |mean2| falls below RATIO_FLOOR the denominator is clamped to
    sign(mean2) * RATIO_FLOOR, except that a pixel where both means vanish
    yields 0.
    """
    window = int(window)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be an odd positive integer, got {window}")
    l1 = _log_transform(i1, "i1")
    l2 = _log_transform(i2, "i2")
    require_same_shape(l1, l2)
    if window > min(l1.shape):
        raise ValueError(
            f"window {window} exceeds smallest image dimension {min(l1.shape)}"
        )
    mean_kernel = Kernel(np.full((window, window), 1.0 / window**2), 0.0)
    mu1 = conv2d_same(l1, mean_kernel)
    mu2 = conv2d_same(l2, mean_kernel)

    both_zero = (np.abs(mu1) < RATIO_FLOOR) & (np.abs(mu2) < RATIO_FLOOR)
    denom = np.where(
        np.abs(mu2) < RATIO_FLOOR, np.copysign(RATIO_FLOOR, mu2), mu2
    )
    di = np.abs(mu1 / denom)
    di[both_zero] = 0.0
    return di
