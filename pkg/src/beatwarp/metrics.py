"""Reconstruction quality metrics and their aggregation.

Per-beat fidelity is measured two ways: percentage RMS difference on the
shared uniform grid, and plain DTW distance (which forgives small timing
shifts the sample-wise error would punish). Fiducial-mark quality is a
greedy one-to-one matching of detected marks to reference marks inside a
tolerance window, scored as sensitivity / positive predictivity / F1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .warping import dtw

__all__ = [
    "prd",
    "dtw_metric",
    "WaveScore",
    "match_waves",
    "BeatRow",
    "MetricStats",
    "aggregate",
    "EvalReport",
]


def prd(x_org, x_rec) -> float:
    """Percentage RMS difference between an original and a reconstruction.

    100 * sqrt(sum((org - rec)^2) / sum(org^2)); both arrays must share
    length and the original must not be all zero.
    """
    a = np.asarray(x_org, dtype=float)
    b = np.asarray(x_rec, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("prd needs two equally long 1-d arrays")
    denom = float(np.sum(a * a))
    if denom == 0.0:
        raise ValueError("prd is undefined for an all-zero original")
    return 100.0 * float(np.sqrt(np.sum((a - b) ** 2) / denom))


def dtw_metric(x_org, x_rec) -> float:
    """DTW distance between original and reconstruction value sequences."""
    return dtw(x_org, x_rec).distance


@dataclass(frozen=True)
class WaveScore:
    """Counts and scores of one fiducial-mark comparison."""

    tp: int
    fp: int
    fn: int
    sensitivity: float
    ppv: float
    f1: float


def match_waves(ref_times, rec_times, window_s: float = 0.15) -> WaveScore:
    """Greedy one-to-one nearest matching of mark times.

    Candidate pairs within ``window_s`` are taken globally nearest first;
    each mark matches at most once. Unmatched reference marks are FN,
    unmatched detections FP. Both-empty scores 1.0 across the board;
    other 0/0 ratios score 0.
    """
    ref = np.asarray(list(ref_times), dtype=float)
    rec = np.asarray(list(rec_times), dtype=float)
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    if len(ref) == 0 and len(rec) == 0:
        return WaveScore(tp=0, fp=0, fn=0, sensitivity=1.0, ppv=1.0, f1=1.0)
    pairs = [
        (abs(r - d), i, j)
        for i, r in enumerate(ref)
        for j, d in enumerate(rec)
        if abs(r - d) <= window_s
    ]
    pairs.sort()
    used_ref: set[int] = set()
    used_rec: set[int] = set()
    tp = 0
    for _, i, j in pairs:
        if i in used_ref or j in used_rec:
            continue
        used_ref.add(i)
        used_rec.add(j)
        tp += 1
    fn = len(ref) - tp
    fp = len(rec) - tp
    sens = tp / (tp + fn) if tp + fn else 0.0
    ppv = tp / (tp + fp) if tp + fp else 0.0
    f1 = 2.0 * sens * ppv / (sens + ppv) if sens + ppv else 0.0
    return WaveScore(tp=tp, fp=fp, fn=fn, sensitivity=sens, ppv=ppv, f1=f1)


@dataclass(frozen=True)
class BeatRow:
    """One per-beat evaluation row."""

    beat_id: int
    method: str
    bits: int
    prd: float
    dtw_distance: float


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float
    p5: float
    p25: float
    p50: float
    p75: float
    p95: float


@dataclass(frozen=True)
class EvalReport:
    """Everything a comparison run produces, ready for serialization."""

    per_beat: list[BeatRow]
    aggregates: dict[tuple[str, int], dict[str, object]]
    wave_stats: dict[tuple[str, int, str], WaveScore] = field(default_factory=dict)
    srf: dict[int, float] = field(default_factory=dict)
    skipped: list[dict[str, object]] = field(default_factory=list)


def _stats(values: np.ndarray) -> MetricStats:
    qs = np.percentile(values, [5, 25, 50, 75, 95])
    return MetricStats(
        mean=float(np.mean(values)),
        std=float(np.std(values)),
        p5=float(qs[0]),
        p25=float(qs[1]),
        p50=float(qs[2]),
        p75=float(qs[3]),
        p95=float(qs[4]),
    )


def aggregate(rows: list[BeatRow]) -> dict[tuple[str, int], dict[str, object]]:
    """Aggregate per-beat rows into per-(method, bits) statistics.

    Each group gets mean/std and the 5/25/50/75/95 percentiles of PRD and
    DTW distance, plus the id of the beat whose DTW distance is closest
    to the group median (the exemplar to plot for that group; earliest
    beat wins a tie).
    """
    if not rows:
        raise ValueError("no rows to aggregate")
    groups: dict[tuple[str, int], list[BeatRow]] = {}
    for r in rows:
        groups.setdefault((r.method, r.bits), []).append(r)
    out: dict[tuple[str, int], dict[str, object]] = {}
    for key in sorted(groups):
        rs = sorted(groups[key], key=lambda r: r.beat_id)
        d = np.array([r.dtw_distance for r in rs])
        p = np.array([r.prd for r in rs])
        med = float(np.percentile(d, 50))
        off = np.abs(d - med)
        median_idx = int(np.argmin(off))  # first minimum: earliest beat
        out[key] = {
            "prd": _stats(p),
            "dtw": _stats(d),
            "n": len(rs),
            "median_beat_id": rs[median_idx].beat_id,
        }
    return out
