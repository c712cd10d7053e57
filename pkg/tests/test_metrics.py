from __future__ import annotations

import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beatwarp.metrics import BeatRow, aggregate, dtw_metric, match_waves, prd


# ---------------------------------------------------------------------------
# prd
# ---------------------------------------------------------------------------

def test_prd_known_values():
    assert prd([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert prd([3.0, 4.0], [0.0, 0.0]) == pytest.approx(100.0)
    assert prd([3.0, 4.0], [3.0, 0.0]) == pytest.approx(80.0)


@given(
    v=st.lists(st.floats(-50, 50), min_size=2, max_size=20),
    c=st.floats(0.1, 10.0),
)
@settings(max_examples=60, deadline=None)
def test_prd_is_scale_invariant(v, c):
    org = np.asarray(v) + 1.0  # keep away from the all-zero original
    rec = org * 0.9
    assert prd(c * org, c * rec) == pytest.approx(prd(org, rec), rel=1e-9)


def test_prd_validation():
    with pytest.raises(ValueError):
        prd([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        prd([0.0, 0.0], [1.0, 2.0])


def test_dtw_metric_is_plain_dtw():
    assert dtw_metric([0, 1, 0], [0, 0, 1, 0]) == 0.0
    assert dtw_metric([0, 0], [5, 5]) == 10.0


# ---------------------------------------------------------------------------
# match_waves
# ---------------------------------------------------------------------------

def test_match_perfect():
    s = match_waves([1.0, 2.0, 3.0], [1.01, 2.0, 2.99])
    assert (s.tp, s.fp, s.fn) == (3, 0, 0)
    assert s.f1 == 1.0


def test_match_missed_and_spurious():
    s = match_waves([1.0, 2.0], [1.01, 5.0])
    assert (s.tp, s.fp, s.fn) == (1, 1, 1)
    assert s.sensitivity == 0.5 and s.ppv == 0.5 and s.f1 == 0.5


def test_match_outside_window_does_not_count():
    s = match_waves([1.0], [1.2], window_s=0.15)
    assert (s.tp, s.fp, s.fn) == (0, 1, 1)
    assert s.f1 == 0.0


def test_match_one_to_one_greedy_nearest():
    # two detections near one reference: only the nearer one matches
    s = match_waves([1.0], [0.95, 1.02])
    assert (s.tp, s.fp, s.fn) == (1, 1, 0)
    # the global nearest pair wins even across references
    s2 = match_waves([0.0, 0.1], [0.09], window_s=0.15)
    assert (s2.tp, s2.fp, s2.fn) == (1, 0, 1)


def test_match_empty_conventions():
    both = match_waves([], [])
    assert both.sensitivity == both.ppv == both.f1 == 1.0
    none_detected = match_waves([1.0], [])
    assert none_detected.f1 == 0.0
    spurious_only = match_waves([], [1.0])
    assert spurious_only.f1 == 0.0


def test_match_symmetry_swaps_roles():
    rng = np.random.default_rng(17)
    ref = np.sort(rng.uniform(0, 30, size=25))
    rec = np.sort(rng.uniform(0, 30, size=18))
    a = match_waves(ref, rec)
    b = match_waves(rec, ref)
    assert a.tp == b.tp
    assert a.fp == b.fn and a.fn == b.fp
    assert a.sensitivity == b.ppv and a.ppv == b.sensitivity
    assert a.f1 == pytest.approx(b.f1)


def test_match_f1_zero_only_without_true_positives():
    rng = np.random.default_rng(18)
    for _ in range(20):
        ref = np.sort(rng.uniform(0, 10, size=rng.integers(0, 6)))
        rec = np.sort(rng.uniform(0, 10, size=rng.integers(0, 6)))
        s = match_waves(ref, rec)
        if len(ref) == 0 and len(rec) == 0:
            continue
        assert (s.f1 == 0.0) == (s.tp == 0)


def test_match_window_validation():
    with pytest.raises(ValueError):
        match_waves([1.0], [1.0], window_s=0.0)


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------

def test_aggregate_single_row():
    rows = [BeatRow(beat_id=7, method="linear", bits=4, prd=12.0, dtw_distance=3.0)]
    agg = aggregate(rows)
    stats = agg[("linear", 4)]
    assert stats["n"] == 1
    assert stats["median_beat_id"] == 7
    assert stats["prd"].mean == 12.0
    assert stats["prd"].std == 0.0
    assert stats["dtw"].p50 == 3.0


def test_aggregate_constant_rows_have_zero_std():
    rows = [
        BeatRow(beat_id=k, method="hold", bits=3, prd=5.0, dtw_distance=2.0)
        for k in range(10)
    ]
    agg = aggregate(rows)[("hold", 3)]
    assert agg["prd"].std == 0.0
    assert agg["dtw"].p5 == agg["dtw"].p95 == 2.0


def test_aggregate_matches_reference_formulas():
    rng = np.random.default_rng(19)
    prds = rng.uniform(1, 50, size=100)
    dtws = rng.uniform(0, 10, size=100)
    rows = [
        BeatRow(beat_id=k, method="m", bits=4, prd=float(prds[k]), dtw_distance=float(dtws[k]))
        for k in range(100)
    ]
    agg = aggregate(rows)[("m", 4)]
    assert agg["prd"].mean == pytest.approx(statistics.fmean(prds), rel=1e-12)
    assert agg["prd"].std == pytest.approx(statistics.pstdev(prds), rel=1e-9)

    def pctl(data, q):
        # linear interpolation between closest ranks, the numpy default
        s = sorted(data)
        pos = (len(s) - 1) * q / 100.0
        lo = int(np.floor(pos))
        hi = int(np.ceil(pos))
        return s[lo] + (s[hi] - s[lo]) * (pos - lo)

    for q, name in [(5, "p5"), (25, "p25"), (50, "p50"), (75, "p75"), (95, "p95")]:
        assert getattr(agg["dtw"], name) == pytest.approx(pctl(dtws, q), rel=1e-12)


def test_aggregate_median_beat_id_hits_group_median():
    rows = [
        BeatRow(beat_id=k, method="m", bits=4, prd=1.0, dtw_distance=float(k))
        for k in range(11)
    ]
    agg = aggregate(rows)[("m", 4)]
    assert agg["median_beat_id"] == 5


def test_aggregate_groups_by_method_and_bits():
    rows = [
        BeatRow(beat_id=0, method="a", bits=3, prd=1.0, dtw_distance=1.0),
        BeatRow(beat_id=0, method="a", bits=4, prd=2.0, dtw_distance=2.0),
        BeatRow(beat_id=0, method="b", bits=3, prd=3.0, dtw_distance=3.0),
    ]
    agg = aggregate(rows)
    assert set(agg) == {("a", 3), ("a", 4), ("b", 3)}


def test_aggregate_empty_is_an_error():
    with pytest.raises(ValueError):
        aggregate([])
