"""Agreement metrics between a candidate heatmap and the ground-truth map.

Both maps are binarized at the same threshold first. Accuracy is total-pixel
agreement; mIoU averages the IoU of the positive and the negative class, a
class absent from both maps counting as IoU 1 and absent from exactly one as
IoU 0. Recall of the positive class is also provided because "correctly
segmented area over the ground truth" can be read either way; the report
emits both.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InputError
from .validation import check_threshold


def _binarize(a: np.ndarray, b: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    if a.shape != b.shape:
        raise DimensionError(f"metric inputs differ in shape: {a.shape} vs {b.shape}")
    t = check_threshold(threshold)
    return np.asarray(a) >= t, np.asarray(b) >= t


def accuracy(a: np.ndarray, b_truth: np.ndarray, threshold: float = 0.5) -> float:
    """Percent of pixels whose binarized values agree."""
    x, y = _binarize(a, b_truth, threshold)
    return 100.0 * float(np.mean(x == y))


def _class_iou(x: np.ndarray, y: np.ndarray) -> float:
    union = np.logical_or(x, y).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(x, y).sum()) / float(union)


def miou(a: np.ndarray, b_truth: np.ndarray, threshold: float = 0.5) -> float:
    """Percent mean IoU over the positive and negative classes."""
    x, y = _binarize(a, b_truth, threshold)
    return 100.0 * (_class_iou(x, y) + _class_iou(~x, ~y)) / 2.0


def recall(a: np.ndarray, b_truth: np.ndarray, threshold: float = 0.5) -> float:
    """Percent of ground-truth-positive pixels the candidate also marks.

    Vacuously 100 when the ground truth has no positive pixels.
    """
    x, y = _binarize(a, b_truth, threshold)
    positives = y.sum()
    if positives == 0:
        return 100.0
    return 100.0 * float(np.logical_and(x, y).sum()) / float(positives)


def speedup(base_hz: float, opt_hz: float) -> float:
    """Throughput of the optimized run as a percentage of the baseline."""
    if base_hz <= 0:
        raise InputError(f"baseline frequency must be > 0, got {base_hz}")
    return 100.0 * opt_hz / base_hz
