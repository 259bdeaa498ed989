"""Key-frame candidate sampling at local extrema of frame statistics.

Candidates are taken where the per-frame mean or variance series has a
strict local extremum within a configurable window radius (a plateau of
equal extremal values counts once, at its leftmost index), then thinned so
no two selected frames are closer than min_gap (default 5).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from cagkit.errors import NonFiniteValue
from cagkit.ingest.model import CineSequence, frame_stats

SERIES_MEAN = "mean"
SERIES_VARIANCE = "variance"
_SERIES_RANK = {SERIES_MEAN: 0, SERIES_VARIANCE: 1}


@dataclass(frozen=True)
class ExtremumPoint:
    index: int
    series: str  # "mean" | "variance"
    kind: str  # "max" | "min"
    prominence: float  # |value - neighborhood median|, series units


@dataclass(frozen=True)
class SamplerConfig:
    window_radius: int = 2
    min_gap: int = 5


@dataclass
class CandidateSet:
    exam_id: str
    video_id: str
    selected: list[int] = field(default_factory=list)
    provenance: dict[int, list[ExtremumPoint]] = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "video_id": self.video_id,
            "exam_id": self.exam_id,
            "indices": list(self.selected),
            "provenance": {
                str(idx): [
                    {
                        "index": p.index,
                        "series": p.series,
                        "kind": p.kind,
                        "prominence": p.prominence,
                    }
                    for p in points
                ]
                for idx, points in self.provenance.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "CandidateSet":
        provenance = {
            int(idx): [
                ExtremumPoint(
                    index=p["index"],
                    series=p["series"],
                    kind=p["kind"],
                    prominence=p["prominence"],
                )
                for p in points
            ]
            for idx, points in obj.get("provenance", {}).items()
        }
        return cls(
            exam_id=obj["exam_id"],
            video_id=obj["video_id"],
            selected=list(obj["indices"]),
            provenance=provenance,
        )


def find_extrema(series, window_radius: int, series_name: str = SERIES_MEAN):
    """All strict local extrema of `series` within +/- window_radius.

    An index qualifies as a max (min) when its value is strictly greater
    (less) than every other value in the truncated window around it. A
    plateau of equal extremal values is reported once at its leftmost
    index, with the window extended from both plateau edges. Series
    shorter than 2*window_radius+1 yield no extrema.
    """
    if window_radius < 1:
        raise ValueError(f"window_radius must be >= 1, got {window_radius}")
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise NonFiniteValue(int(bad[0]))
    if n < 2 * window_radius + 1:
        return []

    w = window_radius
    # strict pass: compare each index against every neighbor offset
    is_max = np.ones(n, dtype=bool)
    is_min = np.ones(n, dtype=bool)
    for k in range(1, w + 1):
        gt = x[k:] > x[:-k]
        lt = x[k:] < x[:-k]
        is_max[k:] &= gt
        is_min[k:] &= lt
        is_max[:-k] &= lt
        is_min[:-k] &= gt

    points = []
    for idx in np.flatnonzero(is_max | is_min):
        i = int(idx)
        kind = "max" if is_max[i] else "min"
        points.append(_make_point(x, i, i, kind, w, series_name))

    # plateau pass: runs of >= 2 equal values, treated as one fat point
    run_start = 0
    for i in range(1, n + 1):
        if i == n or x[i] != x[run_start]:
            if i - run_start >= 2:
                point = _classify_plateau(x, run_start, i - 1, w, series_name)
                if point is not None:
                    points.append(point)
            run_start = i

    points.sort(key=lambda p: p.index)
    return points


def _classify_plateau(x, start, end, w, series_name):
    n = x.size
    lo = max(0, start - w)
    hi = min(n - 1, end + w)
    outside = np.concatenate([x[lo:start], x[end + 1:hi + 1]])
    if outside.size == 0:
        return None  # plateau spans the whole series: no extremum
    v = x[start]
    if np.all(outside < v):
        return _make_point(x, start, end, "max", w, series_name)
    if np.all(outside > v):
        return _make_point(x, start, end, "min", w, series_name)
    return None


def _make_point(x, start, end, kind, w, series_name):
    lo = max(0, start - w)
    hi = min(x.size - 1, end + w)
    neighborhood = x[lo:hi + 1]
    prominence = abs(float(x[start]) - float(np.median(neighborhood)))
    return ExtremumPoint(
        index=start, series=series_name, kind=kind, prominence=prominence
    )


def enforce_min_gap(points, min_gap: int = 5) -> list[int]:
    """Greedy selection in descending prominence order.

    Ties break toward the lower frame index, then mean-series points before
    variance-series ones. A point survives iff it sits >= min_gap frames
    from every already-kept index. Returns indices sorted ascending.
    """
    if min_gap < 1:
        raise ValueError(f"min_gap must be >= 1, got {min_gap}")
    ranked = sorted(
        points, key=lambda p: (-p.prominence, p.index, _SERIES_RANK.get(p.series, 2))
    )
    kept: list[int] = []
    for p in ranked:
        if all(abs(p.index - k) >= min_gap for k in kept):
            kept.append(p.index)
    return sorted(kept)


def sample_keyframe_candidates(
    seq: CineSequence, config: SamplerConfig = SamplerConfig()
) -> CandidateSet:
    """Candidates = extrema of the mean series union extrema of the variance
    series, thinned by the min-gap rule.

    A frame index hit by both series contributes one candidate whose
    prominence is the larger of the two.
    """
    stats = frame_stats(seq)
    means = [s.mean for s in stats]
    variances = [s.variance for s in stats]
    mean_points = find_extrema(means, config.window_radius, SERIES_MEAN)
    var_points = find_extrema(variances, config.window_radius, SERIES_VARIANCE)

    by_index: dict[int, list[ExtremumPoint]] = {}
    for p in mean_points + var_points:
        by_index.setdefault(p.index, []).append(p)

    merged = []
    for idx in sorted(by_index):
        contributors = sorted(
            by_index[idx], key=lambda p: (-p.prominence, _SERIES_RANK[p.series])
        )
        merged.append(contributors[0])

    selected = enforce_min_gap(merged, config.min_gap)
    provenance = {idx: sorted(by_index[idx], key=lambda p: _SERIES_RANK[p.series])
                  for idx in selected}
    return CandidateSet(
        exam_id=seq.exam_id,
        video_id=seq.video_id,
        selected=selected,
        provenance=provenance,
    )


def validate_gap(selected, min_gap: int) -> bool:
    """True when every pair of selected indices is >= min_gap apart."""
    s = sorted(selected)
    return all(b - a >= min_gap for a, b in zip(s, s[1:])) if len(s) > 1 else True
