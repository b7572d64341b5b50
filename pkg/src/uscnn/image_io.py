"""Reading and writing the grayscale rasters the pipeline consumes and emits.

Supported formats are 8-bit PGM and 8-bit PNG (the usual interchange formats
for these datasets).  RGB inputs are accepted with a warning and collapsed to
luma.  All writes go to a temporary file first and are renamed into place, so
a failure never leaves a partial output behind.
"""

from __future__ import annotations

import logging
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

logger = logging.getLogger(__name__)

SUPPORTED_SUFFIXES = {".png", ".pgm"}

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

TRUTH_THRESHOLD = 127  # strictly greater-than means changed


class ImageIOError(Exception):
    """Base class for image decode/encode failures."""


class UnsupportedFormatError(ImageIOError):
    """The file is not one of the formats this tool reads."""


class CorruptImageError(ImageIOError):
    """The file looks like a supported format but cannot be decoded."""


def load_gray(path) -> np.ndarray:
    """Decode a grayscale image into a float64 array of values in [0, 255].

    RGB(A) and palette images are converted with the luma weights
    0.299 R + 0.587 G + 0.114 B (a warning is logged).  16-bit images are
    rejected: the pipeline is specified for 8-bit data.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image file: {path}")
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode == "P":
                img = img.convert("RGB")
                mode = "RGB"
            if mode == "L":
                return np.asarray(img, dtype=np.float64)
            if mode in ("RGB", "RGBA"):
                logger.warning("%s is not grayscale; converting via luma weights", path)
                rgb = np.asarray(img, dtype=np.float64)[..., :3]
                r, g, b = LUMA_WEIGHTS
                return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
            raise UnsupportedFormatError(
                f"{path}: mode {mode!r} is not supported (8-bit grayscale or RGB only)"
            )
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"{path}: not a readable PGM/PNG image") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptImageError(f"{path}: failed to decode ({exc})") from exc


def load_truth(path) -> np.ndarray:
    """Load a ground-truth map: pixels brighter than 127 count as changed."""
    return load_gray(path) > TRUTH_THRESHOLD


def _atomic_save(img: Image.Image, path: Path) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=path.suffix)
    try:
        os.close(fd)
        img.save(tmp_name)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def save_map(array: np.ndarray, path) -> None:
    """Write a change map or difference map as an 8-bit grayscale image.

    Boolean arrays are written as 0 (unchanged) / 255 (changed).  Float maps
    are min-max scaled to [0, 255] and rounded half-up; a constant map comes
    out all zero.  The format follows the file suffix (.png or .pgm).
    """
    path = Path(path)
    if path.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise ValueError(
            f"unsupported output suffix {path.suffix!r}; use one of "
            f"{sorted(SUPPORTED_SUFFIXES)}"
        )
    array = np.asarray(array)
    if array.ndim != 2 or array.size == 0:
        raise ValueError(f"map must be a non-empty 2-D array, got shape {array.shape}")
    if array.dtype == bool:
        pixels = np.where(array, 255, 0).astype(np.uint8)
    else:
        values = array.astype(np.float64)
        lo, hi = values.min(), values.max()
        if hi == lo:
            pixels = np.zeros(values.shape, dtype=np.uint8)
        else:
            scaled = (values - lo) * (255.0 / (hi - lo))
            pixels = np.floor(scaled + 0.5).astype(np.uint8)
    _atomic_save(Image.fromarray(pixels, mode="L"), path)
