"""ROC curve and AUC for membership scores.

AUC is the Mann-Whitney rank statistic: over all (member, non-member)
pairs, the fraction where the member scores strictly higher, with ties
counted one half. It is computed from average ranks in O(n log n), and
equals the trapezoidal area under the ROC curve emitted at every
distinct threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import MEMBER, NONMEMBER


@dataclass(frozen=True)
class ScoredSample:
    score: float
    label: str

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score {self.score}")
        if self.label not in (MEMBER, NONMEMBER):
            raise ValueError(f"bad label {self.label!r}")


@dataclass(frozen=True)
class RocCurve:
    """Operating points (fpr, tpr), one per threshold, both non-decreasing.

    ``thresholds[j]`` is the cutoff at which scores >= threshold are
    called members; the leading (0, 0) point carries the sentinel
    threshold max(score) + 1 under which nothing is called a member.
    """

    points: tuple[tuple[float, float], ...]
    thresholds: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.thresholds):
            raise ValueError("points and thresholds differ in length")
        if self.points[0] != (0.0, 0.0) or self.points[-1] != (1.0, 1.0):
            raise ValueError("curve must run from (0,0) to (1,1)")
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            if x1 < x0 or y1 < y0:
                raise ValueError("fpr/tpr must be non-decreasing along the curve")


def _split_scores(samples: Sequence[ScoredSample]) -> tuple[np.ndarray, np.ndarray]:
    members = np.array([s.score for s in samples if s.label == MEMBER])
    nonmembers = np.array([s.score for s in samples if s.label == NONMEMBER])
    if members.size == 0 or nonmembers.size == 0:
        raise ValueError("AUC needs at least one member and one non-member")
    return members, nonmembers


def auc(samples: Sequence[ScoredSample]) -> float:
    """Probability a random member outscores a random non-member (ties 0.5)."""
    members, nonmembers = _split_scores(samples)
    scores = np.concatenate([members, nonmembers])
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    # average rank over each tie group (1-based ranks)
    ranks = np.empty(scores.size)
    start = 0
    for stop in range(1, scores.size + 1):
        if stop == scores.size or sorted_scores[stop] != sorted_scores[start]:
            ranks[order[start:stop]] = 0.5 * (start + stop + 1)
            start = stop
    n_pos = members.size
    rank_sum = float(ranks[:n_pos].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * nonmembers.size)


def roc_points(samples: Sequence[ScoredSample]) -> RocCurve:
    """ROC at every distinct score threshold, descending, plus a sentinel."""
    members, nonmembers = _split_scores(samples)
    scores = np.concatenate([members, nonmembers])
    is_member = np.concatenate(
        [np.ones(members.size, bool), np.zeros(nonmembers.size, bool)]
    )
    order = np.argsort(-scores, kind="mergesort")
    scores = scores[order]
    is_member = is_member[order]

    points: list[tuple[float, float]] = [(0.0, 0.0)]
    thresholds: list[float] = [float(scores[0]) + 1.0]
    tp = fp = 0
    n_pos, n_neg = members.size, nonmembers.size
    for j in range(scores.size):
        tp += bool(is_member[j])
        fp += not is_member[j]
        last = j + 1 == scores.size
        if last or scores[j + 1] != scores[j]:
            points.append((fp / n_neg, tp / n_pos))
            thresholds.append(float(scores[j]))
    return RocCurve(points=tuple(points), thresholds=tuple(thresholds))


def trapezoid_area(curve: RocCurve) -> float:
    """Area under the curve by the trapezoid rule."""
    area = 0.0
    for (x0, y0), (x1, y1) in zip(curve.points, curve.points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def write_roc_csv(curve: RocCurve, path: str | Path) -> None:
    """Export ``threshold,fpr,tpr`` rows, six decimal places."""
    lines = ["threshold,fpr,tpr"]
    for thr, (fpr, tpr) in zip(curve.thresholds, curve.points):
        lines.append(f"{thr:.6f},{fpr:.6f},{tpr:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
