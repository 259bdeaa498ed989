"""Sampler: extrema detection vs an exhaustive oracle, gap enforcement,
candidate assembly."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cagkit.errors import NonFiniteValue
from cagkit.ingest.model import sequence_from_arrays
from cagkit.sampler import (
    CandidateSet,
    ExtremumPoint,
    SamplerConfig,
    enforce_min_gap,
    find_extrema,
    sample_keyframe_candidates,
    validate_gap,
)

from conftest import constant_frames


def extrema_oracle(series, w):
    """Literal transcription of the contract: walk plateaus, compare the
    plateau value against every other value within w of its edges."""
    n = len(series)
    out = []
    if n < 2 * w + 1:
        return out
    i = 0
    while i < n:
        j = i
        while j + 1 < n and series[j + 1] == series[i]:
            j += 1
        lo, hi = max(0, i - w), min(n - 1, j + w)
        outside = [series[k] for k in range(lo, hi + 1) if k < i or k > j]
        v = series[i]
        if outside:
            if all(o < v for o in outside):
                out.append((i, "max"))
            elif all(o > v for o in outside):
                out.append((i, "min"))
        i = j + 1
    return out


def as_pairs(points):
    return [(p.index, p.kind) for p in points]


# --- find_extrema ----------------------------------------------------------------

def test_constant_series_has_no_extrema():
    assert find_extrema([5, 5, 5, 5, 5], 1) == []


def test_zigzag_example():
    points = find_extrema([0, 1, 0, 2, 0], 1)
    assert as_pairs(points) == [(0, "min"), (1, "max"), (2, "min"), (3, "max"), (4, "min")]


def test_sinusoid_fixture_matches_oracle():
    series = [math.sin(2 * math.pi * t / 20) for t in range(60)]
    points = find_extrema(series, 2)
    expected = extrema_oracle(series, 2)
    assert as_pairs(points) == expected
    # frozen oracle output: interior bolus peaks plus the eligible endpoints
    assert [i for i, kind in expected if kind == "max"] == [5, 25, 45, 59]
    assert [i for i, kind in expected if kind == "min"] == [0, 15, 35, 55]


def test_plateau_reports_leftmost_index_once():
    # endpoints are eligible minima through the truncated window
    assert as_pairs(find_extrema([1, 2, 2, 1], 1)) == [
        (0, "min"), (1, "max"), (3, "min")
    ]
    # a shoulder plateau next to a higher value is not an extremum
    assert (1, "max") not in as_pairs(find_extrema([1, 2, 2, 3, 0], 1))


def test_equal_values_apart_are_not_a_plateau():
    # 2s at indices 0 and 2 see each other inside w=2 but are not contiguous,
    # so neither the strict rule nor the plateau rule fires anywhere
    assert as_pairs(find_extrema([2, 0, 2, 0, 0], 2)) == []


def test_short_series_yields_empty():
    assert find_extrema([1, 2], 1) == []
    assert find_extrema([0, 3, 0, 3], 2) == []


def test_non_finite_value_raises_with_index():
    with pytest.raises(NonFiniteValue) as err:
        find_extrema([0.0, 1.0, float("nan"), 2.0, 1.0], 1)
    assert err.value.index == 2


def test_prominence_is_distance_to_window_median():
    points = find_extrema([0, 1, 0, 2, 0], 1)
    by_index = {p.index: p for p in points}
    assert by_index[3].prominence == 2.0  # window [0,2,0], median 0
    assert by_index[1].prominence == 1.0
    assert by_index[0].prominence == 0.5  # truncated window [0,1], median 0.5


@settings(max_examples=150, deadline=None)
@given(
    series=st.lists(
        st.one_of(
            st.integers(-5, 5).map(float),
            st.floats(-100, 100, allow_nan=False, allow_infinity=False),
        ),
        min_size=0,
        max_size=120,
    ),
    w=st.integers(1, 4),
)
def test_find_extrema_matches_oracle(series, w):
    assert as_pairs(find_extrema(series, w)) == extrema_oracle(series, w)


@settings(max_examples=60, deadline=None)
@given(
    series=st.lists(st.integers(-4, 4).map(float), min_size=3, max_size=80),
    w=st.integers(1, 3),
    a=st.floats(0.01, 50, allow_nan=False),
    b=st.floats(-100, 100, allow_nan=False),
)
def test_affine_invariance(series, w, a, b):
    base = find_extrema(series, w)
    mapped = find_extrema([a * x + b for x in series], w)
    assert as_pairs(base) == as_pairs(mapped)


# --- enforce_min_gap ---------------------------------------------------------------

def pt(index, prominence, series="mean", kind="max"):
    return ExtremumPoint(index=index, series=series, kind=kind, prominence=prominence)


def greedy_oracle(points, min_gap):
    rank = {"mean": 0, "variance": 1}
    order = sorted(points, key=lambda p: (-p.prominence, p.index, rank[p.series]))
    kept = []
    for p in order:
        if all(abs(p.index - q) >= min_gap for q in kept):
            kept.append(p.index)
    return sorted(kept)


def test_gap_example_prominence_ranked():
    points = [pt(3, 9), pt(6, 5), pt(10, 7)]
    assert enforce_min_gap(points, 5) == [3, 10]
    assert greedy_oracle(points, 5) == [3, 10]


def test_gap_single_point():
    assert enforce_min_gap([pt(4, 1.0)], 5) == [4]


def test_gap_tie_breaks_toward_lower_index():
    points = [pt(4, 2.0), pt(0, 2.0)]
    assert enforce_min_gap(points, 5) == [0]


def test_gap_mean_series_wins_tie_at_same_index():
    points = [pt(2, 1.0, series="variance"), pt(2, 1.0, series="mean"), pt(3, 1.0)]
    assert enforce_min_gap(points, 1) == [2, 3]


@settings(max_examples=120, deadline=None)
@given(
    entries=st.lists(
        st.tuples(st.integers(0, 60), st.floats(0, 10, allow_nan=False),
                  st.sampled_from(["mean", "variance"])),
        min_size=0,
        max_size=30,
    ),
    min_gap=st.integers(1, 10),
)
def test_gap_property_and_oracle(entries, min_gap):
    points = [pt(i, prom, series=s) for i, prom, s in entries]
    out = enforce_min_gap(points, min_gap)
    assert validate_gap(out, min_gap)
    assert out == greedy_oracle(points, min_gap)


# --- sample_keyframe_candidates ------------------------------------------------------

def test_constant_cine_yields_empty_candidates():
    seq = sequence_from_arrays("e", "v", constant_frames([7] * 6))
    out = sample_keyframe_candidates(seq, SamplerConfig(window_radius=1, min_gap=5))
    assert out.selected == [] and out.provenance == {}


def test_mean_series_extrema_become_candidates():
    # constant frames: mean series [0,1,0,2,0], variance series all zero
    seq = sequence_from_arrays("e", "v", constant_frames([0, 1, 0, 2, 0]))
    out = sample_keyframe_candidates(seq, SamplerConfig(window_radius=1, min_gap=1))
    assert out.selected == [0, 1, 2, 3, 4]
    assert set(out.provenance) == {0, 1, 2, 3, 4}
    assert all(p.series == "mean" for pts in out.provenance.values() for p in pts)


def test_min_gap_keeps_highest_prominence():
    seq = sequence_from_arrays("e", "v", constant_frames([0, 1, 0, 2, 0]))
    out = sample_keyframe_candidates(seq, SamplerConfig(window_radius=1, min_gap=5))
    assert out.selected == [3]


def test_both_series_merge_keeps_larger_prominence():
    # frames alternate between constant and split values: variance spikes
    frames = [
        np.full((2, 2), 10, dtype=np.uint8),
        np.array([[0, 0], [40, 40]], dtype=np.uint8),
        np.full((2, 2), 10, dtype=np.uint8),
        np.array([[0, 0], [40, 40]], dtype=np.uint8),
        np.full((2, 2), 10, dtype=np.uint8),
    ]
    seq = sequence_from_arrays("e", "v", frames)
    out = sample_keyframe_candidates(seq, SamplerConfig(window_radius=1, min_gap=1))
    # frames 1 and 3 are extrema of both mean (20) and variance (400) series
    assert 1 in out.provenance and 3 in out.provenance
    assert {p.series for p in out.provenance[1]} == {"mean", "variance"}


def test_candidate_serialization_is_deterministic():
    seq = sequence_from_arrays("e", "v", constant_frames([0, 3, 0, 1, 0, 5, 0]))
    a = sample_keyframe_candidates(seq, SamplerConfig(1, 2)).to_json()
    b = sample_keyframe_candidates(seq, SamplerConfig(1, 2)).to_json()
    assert a == b
    parsed = CandidateSet.from_json_obj(json.loads(a))
    assert parsed.to_json() == a


@settings(max_examples=40, deadline=None)
@given(
    values=st.lists(st.integers(0, 200), min_size=1, max_size=50),
    w=st.integers(1, 3),
    gap=st.integers(1, 8),
)
def test_random_cines_respect_gap(values, w, gap):
    seq = sequence_from_arrays("e", "v", constant_frames(values))
    out = sample_keyframe_candidates(seq, SamplerConfig(window_radius=w, min_gap=gap))
    assert validate_gap(out.selected, gap)
    assert set(out.selected) <= set(out.provenance)
