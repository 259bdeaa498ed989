"""Confusion matrices, weighted F1, label-collapse views, and mean/SD summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

from cagkit.errors import EmptyInput, EmptyMatrix, LengthMismatch, UnknownLabel


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are truth, columns are predicted; counts are non-negative ints."""

    classes: tuple
    counts: tuple  # tuple of row tuples

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row_sums(self) -> list[int]:
        return [sum(row) for row in self.counts]

    def col_sums(self) -> list[int]:
        n = len(self.classes)
        return [sum(self.counts[i][j] for i in range(n)) for j in range(n)]

    def to_json_obj(self) -> dict:
        return {
            "classes": [str(c) for c in self.classes],
            "counts": [list(row) for row in self.counts],
        }

    def row_normalized(self) -> list[list[float]]:
        """Each row divided by its support; zero-support rows stay zero."""
        out = []
        for row in self.counts:
            support = sum(row)
            out.append([c / support if support else 0.0 for c in row])
        return out


@dataclass(frozen=True)
class ScoreSummary:
    mean: float
    std: float
    n: int

    def to_json_obj(self) -> dict:
        return {"mean": self.mean, "std": self.std, "n": self.n}


def confusion_matrix(truth, pred, classes) -> ConfusionMatrix:
    if len(truth) != len(pred):
        raise LengthMismatch(f"truth has {len(truth)} items, pred has {len(pred)}")
    index = {c: i for i, c in enumerate(classes)}
    n = len(classes)
    counts = [[0] * n for _ in range(n)]
    for t, p in zip(truth, pred):
        if t not in index:
            raise UnknownLabel(t)
        if p not in index:
            raise UnknownLabel(p)
        counts[index[t]][index[p]] += 1
    return ConfusionMatrix(
        classes=tuple(classes), counts=tuple(tuple(row) for row in counts)
    )


def weighted_f1(cm: ConfusionMatrix) -> float:
    """Support-weighted mean of per-class F1.

    Zero-support classes carry zero weight; classes with P+R=0 contribute
    F1=0 rather than NaN.
    """
    total = cm.total
    if total < 1:
        raise EmptyMatrix("confusion matrix has no counts")
    row_sums = cm.row_sums()
    col_sums = cm.col_sums()
    weighted = 0.0
    for i, support in enumerate(row_sums):
        if support == 0:
            continue
        tp = cm.counts[i][i]
        precision = tp / col_sums[i] if col_sums[i] else 0.0
        recall = tp / support
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        weighted += support * f1
    # single final division keeps the diagonal case exactly 1.0
    return weighted / total


def collapse_confusion(cm: ConfusionMatrix, collapse) -> ConfusionMatrix:
    """Sum counts into collapsed cells; class order follows first appearance."""
    collapsed_classes = []
    seen = {}
    for c in cm.classes:
        target = collapse(c) if callable(collapse) else collapse[c]
        if target not in seen:
            seen[target] = len(collapsed_classes)
            collapsed_classes.append(target)
    n = len(collapsed_classes)
    counts = [[0] * n for _ in range(n)]
    for i, ci in enumerate(cm.classes):
        ti = seen[collapse(ci) if callable(collapse) else collapse[ci]]
        for j, cj in enumerate(cm.classes):
            tj = seen[collapse(cj) if callable(collapse) else collapse[cj]]
            counts[ti][tj] += cm.counts[i][j]
    return ConfusionMatrix(
        classes=tuple(collapsed_classes), counts=tuple(tuple(row) for row in counts)
    )


def summarize(values) -> ScoreSummary:
    """Arithmetic mean and sample (n-1) standard deviation; std=0 when n=1."""
    values = list(values)
    if not values:
        raise EmptyInput("summarize requires at least one value")
    n = len(values)
    mean = sum(values) / n
    if n == 1 or all(v == values[0] for v in values):
        return ScoreSummary(mean=mean, std=0.0, n=n)
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return ScoreSummary(mean=mean, std=math.sqrt(var), n=n)
