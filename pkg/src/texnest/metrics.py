"""Segmentation quality: training losses and overlap scores.

The composite loss is a weighted sum of a class-weighted cross entropy and
a soft Dice term, both averaged the same way so the composite is exactly
alpha * ce + beta * dice. Overlap scores (IoU, F1) come from an integer
confusion matrix with truth on the rows and prediction on the columns.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError
from .grid import LabelVolume, OneHotMask, ProbabilityField, softmax_field

DEFAULT_CLASS_WEIGHTS = (0.1, 0.45, 0.45)
DEFAULT_ALPHA = 0.3
DEFAULT_BETA = 0.7
DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class LossConfig:
    """Weights and constants of the composite loss."""

    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    class_weights: tuple[float, ...] = DEFAULT_CLASS_WEIGHTS
    epsilon: float = DEFAULT_EPSILON
    # alternate reading of the dice average: divide by sum(w) instead of C
    normalized_by_weight_sum: bool = False

    def __post_init__(self):
        if any(w < 0 for w in self.class_weights):
            raise ValueError("class weights must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "class_weights", tuple(float(w) for w in self.class_weights))

    def weights_for(self, num_classes: int) -> np.ndarray:
        if len(self.class_weights) != num_classes:
            raise ConsistencyError(
                f"{len(self.class_weights)} class weights for {num_classes} classes"
            )
        return np.asarray(self.class_weights, dtype=np.float64)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Integer class-confusion counts, truth on rows, prediction on columns."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"confusion matrix must be square, got shape {c.shape}")
        if (c < 0).any():
            raise ValueError("confusion counts must be >= 0")
        object.__setattr__(self, "counts", c)
        c.setflags(write=False)

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassScore:
    """Overlap scores of one class; NaN when the class is absent everywhere."""

    iou: float
    f1: float


@dataclass(frozen=True)
class ScoreReport:
    per_class: dict[int, ClassScore]
    mean_iou: float
    mean_f1: float


def _check_pair(scores: ProbabilityField, truth: OneHotMask):
    if scores.channels.shape != truth.channels.shape:
        raise ConsistencyError(
            f"score shape {scores.channels.shape} does not match "
            f"truth shape {truth.channels.shape}"
        )


def cross_entropy(logits: ProbabilityField, truth: OneHotMask,
                  config: LossConfig = LossConfig()) -> float:
    """Class-weighted cross entropy, averaged over voxels.

    Evaluated through a max-shifted log-softmax, never through log of a
    softmax, so saturated logits stay finite.
    """
    if logits.kind != "logits":
        raise ValueError(f"cross_entropy expects logits, got kind={logits.kind!r}")
    _check_pair(logits, truth)
    w = config.weights_for(truth.num_classes)

    x = np.asarray(logits.channels, dtype=np.float64)
    shifted = x - x.max(axis=0, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))
    per_voxel = -(w.reshape(-1, 1, 1, 1) * log_p * truth.channels).sum(axis=0)
    return float(per_voxel.mean())


def dice_loss(probabilities: ProbabilityField, truth: OneHotMask,
              config: LossConfig = LossConfig()) -> float:
    """Soft Dice loss: one minus the weighted mean per-class overlap.

    The per-class overlap is 2*sum(p*y) / (sum(p) + sum(y) + eps) over the
    whole volume. The weighted mean divides by the class count, so with
    weights that do not sum to C a perfect prediction keeps a nonzero
    floor (sum(w)/C below 1); set normalized_by_weight_sum to divide by
    sum(w) instead.
    """
    if probabilities.kind != "probabilities":
        raise ValueError(f"dice_loss expects probabilities, got kind={probabilities.kind!r}")
    _check_pair(probabilities, truth)
    c = truth.num_classes
    w = config.weights_for(c)

    p = np.asarray(probabilities.channels, dtype=np.float64).reshape(c, -1)
    y = np.asarray(truth.channels, dtype=np.float64).reshape(c, -1)
    inter = (p * y).sum(axis=1)
    denom = p.sum(axis=1) + y.sum(axis=1) + config.epsilon
    dice = 2.0 * inter / denom
    norm = w.sum() if config.normalized_by_weight_sum else float(c)
    if norm <= 0:
        raise ValueError("cannot normalize dice by a non-positive weight sum")
    return float(1.0 - (w * dice).sum() / norm)


def composite_loss(logits: ProbabilityField, truth: OneHotMask,
                   config: LossConfig = LossConfig()) -> float:
    """alpha * cross-entropy + beta * dice, dice on the softmax of the logits."""
    ce = cross_entropy(logits, truth, config)
    dl = dice_loss(softmax_field(logits), truth, config)
    return config.alpha * ce + config.beta * dl


def confusion(pred: LabelVolume, truth: LabelVolume) -> ConfusionMatrix:
    """Tally prediction against truth; truth indexes rows."""
    if pred.geometry.shape != truth.geometry.shape:
        raise ConsistencyError(
            f"prediction shape {pred.geometry.shape} does not match "
            f"truth shape {truth.geometry.shape}"
        )
    c = max(pred.num_classes, truth.num_classes)
    t = truth.labels.astype(np.int64).ravel()
    p = pred.labels.astype(np.int64).ravel()
    counts = np.bincount(t * c + p, minlength=c * c).reshape(c, c)
    return ConfusionMatrix(counts)


def iou_f1(cm: ConfusionMatrix, eval_classes=None) -> ScoreReport:
    """Per-class IoU and F1 plus their means over the evaluated classes.

    A class that never occurs in truth or prediction has an empty union;
    its scores are NaN and it is left out of the means.
    """
    c = cm.num_classes
    if eval_classes is None:
        eval_classes = range(c)
    eval_classes = [int(k) for k in eval_classes]
    for k in eval_classes:
        if not 0 <= k < c:
            raise ValueError(f"class {k} out of range for {c}-class matrix")

    counts = cm.counts
    per_class: dict[int, ClassScore] = {}
    ious, f1s = [], []
    for k in eval_classes:
        tp = int(counts[k, k])
        fn = int(counts[k, :].sum()) - tp
        fp = int(counts[:, k].sum()) - tp
        union = tp + fp + fn
        if union == 0:
            per_class[k] = ClassScore(math.nan, math.nan)
            continue
        iou = tp / union
        f1 = 2 * tp / (2 * tp + fp + fn)
        per_class[k] = ClassScore(iou, f1)
        ious.append(iou)
        f1s.append(f1)

    mean_iou = float(np.mean(ious)) if ious else math.nan
    mean_f1 = float(np.mean(f1s)) if f1s else math.nan
    return ScoreReport(per_class, mean_iou, mean_f1)


def write_scores_csv(path, report: ScoreReport, num_classes: int,
                     stage: str = "", dataset: str = ""):
    """One CSV row of per-class scores: stage, dataset, iou_c..., f1_c...."""
    header = ["stage", "dataset"]
    header += [f"iou_{k}" for k in range(num_classes)]
    header += [f"f1_{k}" for k in range(num_classes)]
    row = [stage, dataset]
    for metric in ("iou", "f1"):
        for k in range(num_classes):
            score = report.per_class.get(k)
            value = getattr(score, metric) if score is not None else math.nan
            row.append("" if (value is None or math.isnan(value)) else repr(float(value)))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerow(row)
