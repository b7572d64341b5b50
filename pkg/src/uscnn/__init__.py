"""Unsupervised shallow-CNN change detection for bi-temporal grayscale images.

The pipeline trains a small two-branch convolutional network per image pair
with a sparsity objective (no labels, no pretraining), segments the resulting
difference map with deterministic two-cluster k-means, and scores the binary
map against ground truth.  The classical log-ratio and log-mean-ratio
operators it generalizes are included as baselines.
"""

from .clustering import kmeans_binarize
from .metrics import Metrics, evaluate
from .network import ForwardTrace, KernelBank, UscnnParams, forward, init_params
from .operators import lmr, log_ratio
from .training import LossReport, TrainConfig, TrainResult, preprocess, train

__all__ = [
    "ForwardTrace",
    "KernelBank",
    "LossReport",
    "Metrics",
    "TrainConfig",
    "TrainResult",
    "UscnnParams",
    "evaluate",
    "forward",
    "init_params",
    "kmeans_binarize",
    "lmr",
    "log_ratio",
    "preprocess",
    "train",
]

__version__ = "0.1.0"
