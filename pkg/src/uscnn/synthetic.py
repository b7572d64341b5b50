"""Synthetic bi-temporal speckled image pairs with a known changed region.

Real bi-temporal SAR datasets are not redistributable, so tests and demos use
generated pairs: a smooth base texture spanning full dark to saturation,
independent multiplicative gamma speckle on each date, and one inserted
square whose intensity drops by a fixed ratio in the second image.  The pair
is quantized to the 8-bit range like any raster file, which also pins both
images' extremes to 0 and 255 so the two dates share a common radiometric
scale.  The returned truth mask marks the square.
"""

from __future__ import annotations

import numpy as np


def _smooth_texture(rng: np.random.Generator, size: int, low: float,
                    high: float) -> np.ndarray:
    """Low-frequency texture in [low, high] bilinearly upsampled from a coarse grid."""
    coarse_n = 8
    coarse = rng.random((coarse_n, coarse_n))
    axis = np.linspace(0, coarse_n - 1, size)
    i0 = np.floor(axis).astype(int)
    i1 = np.minimum(i0 + 1, coarse_n - 1)
    frac = axis - i0
    tex = coarse[i0][:, i0] * np.outer(1 - frac, 1 - frac) \
        + coarse[i0][:, i1] * np.outer(1 - frac, frac) \
        + coarse[i1][:, i0] * np.outer(frac, 1 - frac) \
        + coarse[i1][:, i1] * np.outer(frac, frac)
    lo, hi = tex.min(), tex.max()
    tex = (tex - lo) / (hi - lo)
    return low + (high - low) * tex


def speckled_pair(size: int = 128, square: int = 24, ratio: float = 3.0,
                  looks: int = 4, seed: int = 0, square_level: float = 120.0,
                  texture_peak: float = 300.0
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Generate (image1, image2, truth) with one inserted changed square.

    The square is an object of uniform reflectivity `square_level` in the
    first date whose intensity drops by `ratio` in the second.  Speckle is
    gamma-distributed with shape `looks` and unit mean, drawn independently
    per date.  Both images are clipped to [0, 255] and rounded to whole
    grayscale levels, so they round-trip exactly through 8-bit files.
    """
    if square >= size:
        raise ValueError("square must be smaller than the image")
    if ratio <= 1.0:
        raise ValueError("ratio must exceed 1")
    rng = np.random.default_rng(seed)
    field = _smooth_texture(rng, size, 0.0, texture_peak)

    margin = max(4, square // 2)
    top = int(rng.integers(margin, size - square - margin + 1))
    left = int(rng.integers(margin, size - square - margin + 1))
    truth = np.zeros((size, size), dtype=bool)
    truth[top:top + square, left:left + square] = True

    base1 = field.copy()
    base2 = field.copy()
    base1[truth] = square_level
    base2[truth] = square_level / ratio

    speckle1 = rng.gamma(looks, 1.0 / looks, size=(size, size))
    speckle2 = rng.gamma(looks, 1.0 / looks, size=(size, size))
    i1 = _quantize(base1 * speckle1)
    i2 = _quantize(base2 * speckle2)
    return i1, i2, truth


def _quantize(image: np.ndarray) -> np.ndarray:
    """Clip to the 8-bit range and round half-up to whole grayscale levels."""
    return np.floor(np.clip(image, 0.0, 255.0) + 0.5)
