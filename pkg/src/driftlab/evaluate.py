"""Accuracy metrics against human line labels.

Accuracy ignores fixations the human labeler discarded. Dataset accuracy
is the unweighted mean of per-trial accuracies, never the fixation-pooled
rate. Confusion matrices are row-normalized over gold lines.
"""

import numpy as np

from .errors import EmptyDatasetError, MetricError, ShapeMismatchError
from .trial import Assignment, Trial


def trial_accuracy(pred: Assignment, trial: Trial) -> float:
    """Fraction of non-discarded fixations assigned to their gold line."""
    gold = trial.gold_lines()
    keep = ~trial.discarded_mask()
    lines = pred.array()
    if lines.shape != gold.shape:
        raise ShapeMismatchError(
            f"{trial.id}: prediction length {lines.shape[0]} != fixation count {gold.shape[0]}"
        )
    if not np.any(gold[keep] >= 0):
        if not keep.any():
            raise MetricError(f"{trial.id}: all fixations discarded")
        raise MetricError(f"{trial.id}: trial has no gold labels")
    scored = keep & (gold >= 0)
    return float(np.mean(lines[scored] == gold[scored]))


def dataset_accuracy(preds: list[Assignment], trials: list[Trial]) -> float:
    """Unweighted mean of per-trial accuracies."""
    if not trials:
        raise EmptyDatasetError("no trials to evaluate")
    if len(preds) != len(trials):
        raise ShapeMismatchError(f"{len(preds)} predictions for {len(trials)} trials")
    return float(np.mean([trial_accuracy(p, t) for p, t in zip(preds, trials)]))


def relative_accuracy(a_m: float, a_c: float) -> float:
    """(a_m - a_c) / a_c, the gain of a method over a baseline."""
    if a_c <= 0:
        raise MetricError(f"baseline accuracy must be positive, got {a_c}")
    return (a_m - a_c) / a_c


def confusion(preds: list[Assignment], trials: list[Trial], k: int) -> np.ndarray:
    """Row-normalized (k, k) confusion matrix over non-discarded fixations.

    Entry (g, p) is the fraction of gold-line-g fixations predicted as p.
    Gold lines with no fixations leave an all-zero row.
    """
    counts = np.zeros((k, k), dtype=np.float64)
    for pred, trial in zip(preds, trials):
        gold = trial.gold_lines()
        keep = ~trial.discarded_mask() & (gold >= 0)
        lines = pred.array()
        if lines.shape != gold.shape:
            raise ShapeMismatchError(f"{trial.id}: prediction/fixation length mismatch")
        for g, p in zip(gold[keep], lines[keep]):
            if g < k and p < k:
                counts[g, p] += 1
    row_sums = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        normalized = np.where(row_sums > 0, counts / np.where(row_sums > 0, row_sums, 1.0), 0.0)
    return normalized
