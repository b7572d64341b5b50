"""Confusion-matrix evaluation of a predicted change map against ground truth.

The changed class is positive.  PCC is plain accuracy; Kappa corrects it for
chance agreement computed from the class marginals.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class Metrics:
    tp: int
    tn: int
    fp: int
    fn: int
    oe: int
    pcc: float
    kappa: float

    @property
    def n_pixels(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(pred: np.ndarray, truth: np.ndarray) -> Metrics:
    """Count the confusion matrix and derive OE, PCC, and Kappa.

    Both inputs are boolean 2-D arrays with True = changed.  When prediction
    and truth agree on a single class everywhere, the chance-agreement term
    degenerates (PRE = 1) and Kappa is defined as 1 if there are no errors,
    else 0.
    """
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise ValueError(
            f"prediction and truth must match in size: {pred.shape} vs {truth.shape}"
        )
    tp = int(np.count_nonzero(pred & truth))
    tn = int(np.count_nonzero(~pred & ~truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    n = tp + tn + fp + fn
    oe = fp + fn
    pcc = (tp + tn) / n

    mc = tp + fn  # actual changed pixels
    mu = fp + tn  # actual unchanged pixels
    pre = ((tp + fp) * mc + (fn + tn) * mu) / n**2
    if pre == 1.0:
        kappa = 1.0 if oe == 0 else 0.0
    else:
        kappa = (pcc - pre) / (1.0 - pre)
    return Metrics(tp, tn, fp, fn, oe, pcc, kappa)
