"""
Equal error rate, minimum detection cost and DET points.

Conventions shared by every function here:
    candidates  sorted unique scores plus +inf
    FRR(t)      fraction of target scores < t
    FAR(t)      fraction of nontarget scores >= t (ties are accepted)
"""

import logging
from typing import Tuple

import numpy as np
import pandas as pd
from sklearn.metrics import det_curve

from ..errors import MetricError
from .trials import ScoreSet

logger = logging.getLogger(__name__)

P_TARGET = 0.05
C_MISS = 1.0
C_FA = 1.0


def error_rates(scores: ScoreSet) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Sweep every candidate threshold.

    Returns:
        (thresholds, frr, far), each of length n_unique + 1
    """
    targets, nontargets = scores.targets, scores.nontargets
    if targets.size == 0 or nontargets.size == 0:
        raise MetricError(
            f"need at least one target and one nontarget score, got {targets.size} and {nontargets.size}"
        )
    thresholds = np.append(np.unique(scores.scores), np.inf)
    frr = np.searchsorted(np.sort(targets), thresholds, side="left") / targets.size
    far = (nontargets.size - np.searchsorted(np.sort(nontargets), thresholds, side="left")) / nontargets.size
    return thresholds, frr, far


def compute_eer(scores: ScoreSet) -> Tuple[float, float]:
    """
    Equal error rate with linear interpolation between the two ROC points
    around the FRR = FAR crossing.

    Returns:
        (eer, threshold)
    """
    thresholds, frr, far = error_rates(scores)
    k = int(np.argmax(frr - far >= 0))
    if frr[k] == far[k] or k == 0:
        return float(frr[k]), float(thresholds[k])
    a, b = frr[k - 1], frr[k]
    c, e = far[k - 1], far[k]
    lam = (c - a) / ((b - a) - (e - c))
    eer = a + lam * (b - a)
    lo, hi = thresholds[k - 1], thresholds[k]
    threshold = lo + lam * (hi - lo) if np.isfinite(hi) else lo
    return float(eer), float(threshold)


def detection_costs(
    scores: ScoreSet, p_target: float = P_TARGET, c_miss: float = C_MISS, c_fa: float = C_FA
) -> Tuple[np.ndarray, np.ndarray]:
    """Normalised detection cost at every candidate threshold."""
    thresholds, frr, far = error_rates(scores)
    dcf = c_miss * p_target * frr + c_fa * (1.0 - p_target) * far
    return thresholds, dcf / min(c_miss * p_target, c_fa * (1.0 - p_target))


def compute_min_dcf(
    scores: ScoreSet, p_target: float = P_TARGET, c_miss: float = C_MISS, c_fa: float = C_FA
) -> Tuple[float, float]:
    """
    Minimum normalised detection cost over all thresholds.

    Returns:
        (min_dcf, threshold)
    """
    if not 0.0 < p_target < 1.0:
        raise MetricError(f"p_target must lie in (0, 1), got {p_target}")
    thresholds, costs = detection_costs(scores, p_target, c_miss, c_fa)
    best = int(np.argmin(costs))
    return float(costs[best]), float(thresholds[best])


def det_points(scores: ScoreSet) -> pd.DataFrame:
    """DET curve as a (threshold, far, frr) table."""
    if scores.targets.size == 0 or scores.nontargets.size == 0:
        raise MetricError("DET points need both target and nontarget scores")
    far, frr, thresholds = det_curve(scores.labels.astype(int), scores.scores)
    return pd.DataFrame({"threshold": thresholds, "far": far, "frr": frr})
