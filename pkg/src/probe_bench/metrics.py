"""Group-structured accuracy metrics and grid-cell selection.

Worst-group accuracy (WGA) is the minimum per-group accuracy over the groups
that actually contain examples; overall accuracy (OA) is the count-weighted
mean, so WGA <= OA always. Aggregation across seed repeats reports the
arithmetic mean and the sample (n-1) standard deviation.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np


class EmptyGroupWarning(UserWarning):
    """A group id had no examples; it is excluded from the WGA minimum."""


@dataclass(frozen=True)
class RunMetrics:
    """Per-group accuracies plus WGA/OA for a single evaluation."""

    per_group_acc: tuple  # one entry per group id; None for empty groups
    per_group_counts: tuple
    wga: float
    oa: float

    def to_json_dict(self) -> dict:
        return {
            "per_group_acc": [None if a is None else round(a, 6) for a in self.per_group_acc],
            "per_group_counts": list(self.per_group_counts),
            "wga": round(self.wga, 6),
            "oa": round(self.oa, 6),
        }


@dataclass(frozen=True)
class AggregateMetrics:
    """Mean and sample std of WGA/OA across seed repeats."""

    mean_wga: float
    std_wga: float
    mean_oa: float
    std_oa: float
    repeat_count: int

    def to_json_dict(self) -> dict:
        return {
            "mean_wga": round(self.mean_wga, 6),
            "std_wga": round(self.std_wga, 6),
            "mean_oa": round(self.mean_oa, 6),
            "std_oa": round(self.std_oa, 6),
            "repeat_count": self.repeat_count,
        }


def group_metrics(preds, labels, groups, group_count: int) -> RunMetrics:
    """Tally per-group accuracy, WGA, and OA for one prediction run."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    if not (preds.shape == labels.shape == groups.shape) or preds.ndim != 1:
        raise ValueError(
            f"preds, labels, groups must be equal-length 1-D sequences, got "
            f"{preds.shape}, {labels.shape}, {groups.shape}"
        )
    if preds.size == 0:
        raise ValueError("empty input: all groups would be empty")
    if group_count < 1:
        raise ValueError(f"group_count must be >= 1, got {group_count}")
    if groups.min() < 0 or groups.max() >= group_count:
        bad = int(groups[(groups < 0) | (groups >= group_count)][0])
        raise ValueError(f"group id {bad} out of range [0, {group_count})")

    counts = np.bincount(groups, minlength=group_count)
    correct = np.bincount(groups[preds == labels], minlength=group_count)

    per_acc = []
    for g in range(group_count):
        if counts[g] == 0:
            warnings.warn(f"group {g} is empty; excluded from WGA", EmptyGroupWarning, stacklevel=2)
            per_acc.append(None)
        else:
            per_acc.append(float(correct[g]) / float(counts[g]))
    wga = min(a for a in per_acc if a is not None)
    oa = float(correct.sum() / counts.sum())
    return RunMetrics(
        per_group_acc=tuple(per_acc),
        per_group_counts=tuple(int(c) for c in counts),
        wga=float(wga),
        oa=oa,
    )


def aggregate(runs) -> AggregateMetrics:
    """Mean and sample std (divisor n-1; zero for a single run) over runs."""
    runs = list(runs)
    if not runs:
        raise ValueError("need at least one run to aggregate")
    group_counts = {len(r.per_group_acc) for r in runs}
    if len(group_counts) != 1:
        raise ValueError(f"runs disagree on group count: {sorted(group_counts)}")
    wgas = [r.wga for r in runs]
    oas = [r.oa for r in runs]
    k = len(runs)

    def _std(values):
        if k < 2:
            return 0.0
        mean = sum(values) / k
        return math.sqrt(sum((v - mean) ** 2 for v in values) / (k - 1))

    return AggregateMetrics(
        mean_wga=sum(wgas) / k,
        std_wga=_std(wgas),
        mean_oa=sum(oas) / k,
        std_oa=_std(oas),
        repeat_count=k,
    )


def select_best(cells):
    """Pick the cell with maximal mean validation WGA.

    `cells` is a sequence of (cell, AggregateMetrics) where the cell exposes
    lr and wd. Ties break by higher mean OA, then lower lr, then lower wd;
    that order is total, so selection is deterministic.
    """
    cells = list(cells)
    if not cells:
        raise ValueError("need at least one cell to select from")
    best_cell, _ = max(
        cells, key=lambda item: (item[1].mean_wga, item[1].mean_oa, -item[0].lr, -item[0].wd)
    )
    return best_cell
