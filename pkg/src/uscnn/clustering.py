"""Deterministic two-cluster k-means over difference-map pixel values.

Centroids start at the minimum and maximum pixel values, so the whole
binarization is deterministic; the cluster with the larger centroid is the
changed class.  Assignment in 1-D reduces to a threshold at the centroid
midpoint, with ties going to the lower centroid.
"""

from __future__ import annotations

import numpy as np

from .tensor_core import as_image

DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-9


def kmeans_binarize(di: np.ndarray, max_iters: int = DEFAULT_MAX_ITERS,
                    tol: float = DEFAULT_TOL) -> np.ndarray:
    """Segment a difference map into a boolean change map (True = changed).

    Lloyd iterations run until both centroids move less than tol or max_iters
    is reached.  A constant map has no second cluster and comes back all
    unchanged.
    """
    di = as_image(di, "difference map")
    if not np.all(np.isfinite(di)):
        raise ValueError("difference map contains non-finite values")
    if max_iters < 1:
        raise ValueError(f"max_iters must be positive, got {max_iters}")
    values = di.ravel()
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.zeros(di.shape, dtype=bool)

    c_low, c_high = lo, hi
    for _ in range(max_iters):
        mid = 0.5 * (c_low + c_high)
        upper = values > mid
        new_low = float(values[~upper].mean())
        new_high = float(values[upper].mean())
        moved = max(abs(new_low - c_low), abs(new_high - c_high))
        c_low, c_high = new_low, new_high
        if moved < tol:
            break

    return di > 0.5 * (c_low + c_high)
