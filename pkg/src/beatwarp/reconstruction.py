"""Rebuilding beat morphology from sparse events by warping a template.

The warping path between a beat's events and a template splits the
template into per-event-interval segments. Each segment is shifted to a
local origin, sheared so it spans its event interval exactly, re-offset
to absolute coordinates and concatenated; the resulting polyline passes
through every recorded event and is linearly resampled onto the uniform
grid of the beat window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampler import EventSample
from .segmentation import EventBeat, window_grid
from .warping import WarpResult, event_series, ii_ddtw, template_series

__all__ = [
    "SegmentPair",
    "ShiftedSegment",
    "WarpedSegment",
    "ReconstructedBeat",
    "segment_assign",
    "shift_segment",
    "warp_segment",
    "recompose",
    "reconstruct_beat",
]


@dataclass(frozen=True)
class SegmentPair:
    """One event interval with its associated template sub-array."""

    e0: EventSample
    e1: EventSample
    t_t: np.ndarray
    t_v: np.ndarray

    def __post_init__(self):
        if self.e1.t < self.e0.t:
            raise ValueError("event endpoints out of order")
        if len(self.t_t) < 2 or len(self.t_t) != len(self.t_v):
            raise ValueError("template segment needs at least two (t, v) points")
        if np.any(np.diff(self.t_t) < 0):
            raise ValueError("template segment times must be nondecreasing")


@dataclass(frozen=True)
class ShiftedSegment:
    """Segment translated so both parts start at (0, 0); keeps the origin."""

    e_t: np.ndarray
    e_v: np.ndarray
    t_t: np.ndarray
    t_v: np.ndarray
    e0: EventSample
    e1: EventSample


@dataclass(frozen=True)
class WarpedSegment:
    """A template segment sheared onto its event interval, still relative."""

    time: np.ndarray
    value: np.ndarray
    e0: EventSample
    e1: EventSample


@dataclass(frozen=True)
class ReconstructedBeat:
    """Uniform samples rebuilt from events, on the beat window grid."""

    values: np.ndarray
    fs: float
    window: tuple[float, float]
    t_first: float
    template_id: int | None = None

    def times(self) -> np.ndarray:
        return self.t_first + np.arange(len(self.values)) / self.fs


def _upper_median(indices: list[int]) -> int:
    return indices[len(indices) // 2]


def segment_assign(path, eb: EventBeat, template) -> list[SegmentPair]:
    """Split the template at the midpoints of per-event match groups.

    ``path`` is a WarpResult (or its raw (i, j) list) aligning the beat's
    events with the template samples. For each event the matched template
    indices form a contiguous run; the upper-median index of each run
    becomes a cut point, and consecutive cut points bound the segment
    carried by that event interval. Template times are the sample grid
    rescaled onto the beat window, so only ratios matter downstream.
    """
    pairs = path.path if isinstance(path, WarpResult) else list(path)
    events = eb.events
    if len(events) < 2:
        raise ValueError("need at least two events to assign segments")
    values = np.asarray(getattr(template, "values", template), dtype=float)
    m = len(values)
    if pairs[0] != (0, 0) or pairs[-1] != (len(events) - 1, m - 1):
        raise ValueError("path does not span the beat and template")

    matches: dict[int, list[int]] = {}
    for i, j in pairs:
        matches.setdefault(i, []).append(j)
    mids = [_upper_median(sorted(matches[i])) for i in range(len(events))]

    t_start, t_end = eb.window
    tpl_t = t_start + np.linspace(0.0, 1.0, m) * (t_end - t_start)

    out = []
    for k in range(len(events) - 1):
        lo, hi = mids[k], mids[k + 1]
        if lo == hi:
            # both intervals cut at the same template sample: the segment
            # degenerates to that point, duplicated so the pair keeps its
            # two-point shape
            t_seg = np.array([tpl_t[lo], tpl_t[lo]])
            v_seg = np.array([values[lo], values[lo]])
        else:
            t_seg = tpl_t[lo : hi + 1].copy()
            v_seg = values[lo : hi + 1].copy()
        out.append(SegmentPair(e0=events[k], e1=events[k + 1], t_t=t_seg, t_v=v_seg))
    return out


def shift_segment(pair: SegmentPair) -> ShiftedSegment:
    """Translate events and template so each starts at (0, 0)."""
    e_t = np.array([0.0, pair.e1.t - pair.e0.t])
    e_v = np.array([0.0, pair.e1.v - pair.e0.v])
    return ShiftedSegment(
        e_t=e_t,
        e_v=e_v,
        t_t=pair.t_t - pair.t_t[0],
        t_v=pair.t_v - pair.t_v[0],
        e0=pair.e0,
        e1=pair.e1,
    )


def warp_segment(seg: ShiftedSegment) -> WarpedSegment:
    """Shear a shifted template segment onto its event interval.

    Time is scaled so the segment spans exactly the event interval; value
    picks up a linear-in-time correction that lands the last point on the
    second event. Endpoints are pinned exactly (no round-off drift). A
    zero-span template or event segment falls back to the straight line
    between the two events, a vertical step when the events share a
    timestamp.
    """
    espan = seg.e_t[1]
    tspan = seg.t_t[-1]
    if espan <= 0.0 or tspan <= 0.0:
        time = np.array([0.0, espan])
        value = np.array([0.0, seg.e_v[1]])
        return WarpedSegment(time=time, value=value, e0=seg.e0, e1=seg.e1)
    time = seg.t_t * (espan / tspan)
    value = seg.t_v + time * ((seg.e_v[1] - seg.t_v[-1]) / espan)
    time[-1] = espan
    value[-1] = seg.e_v[1]
    value[0] = 0.0
    return WarpedSegment(time=time, value=value, e0=seg.e0, e1=seg.e1)


def recompose(
    warped: list[WarpedSegment],
    eb: EventBeat,
    fs: float,
    t_ref: float | None = None,
    template_id: int | None = None,
) -> ReconstructedBeat:
    """Concatenate warped segments and resample the beat window uniformly.

    Each segment is moved back to absolute coordinates with its endpoints
    pinned to the recorded events, shared endpoints are merged, and the
    polyline is linearly interpolated on the window grid (anchored to the
    record lattice when ``t_ref`` is given). A grid time hitting a
    vertical step takes the post-step value; otherwise the step spreads
    across one grid interval.
    """
    if not warped:
        raise ValueError("no segments to recompose")
    ts: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    for k, seg in enumerate(warped):
        t_abs = seg.e0.t + seg.time
        v_abs = seg.e0.v + seg.value
        t_abs[0], v_abs[0] = seg.e0.t, seg.e0.v
        t_abs[-1], v_abs[-1] = seg.e1.t, seg.e1.v
        if k > 0:
            t_abs, v_abs = t_abs[1:], v_abs[1:]  # endpoint shared with previous
        ts.append(t_abs)
        vs.append(v_abs)
    t_all = np.concatenate(ts)
    v_all = np.concatenate(vs)
    grid = window_grid(eb.window, fs, t_ref)
    values = np.interp(grid, t_all, v_all)
    return ReconstructedBeat(
        values=values,
        fs=fs,
        window=eb.window,
        t_first=float(grid[0]),
        template_id=template_id,
    )


def reconstruct_beat(
    eb: EventBeat,
    template,
    fs: float | None = None,
    lam: float = 1.0,
    t_ref: float | None = None,
    warp: WarpResult | None = None,
) -> ReconstructedBeat:
    """Full per-beat pipeline: match (optional), assign, shear, resample.

    ``warp`` short-circuits the alignment when the caller already matched
    the beat (the usual case after template ranking); otherwise the beat
    is aligned against ``template`` here. ``fs`` defaults to the
    template's rate.
    """
    if fs is None:
        fs = template.fs
    if warp is None:
        warp = ii_ddtw(
            event_series(eb, fs), template_series(np.asarray(template.values)), lam=lam
        )
    segments = segment_assign(warp, eb, template)
    warped = [warp_segment(shift_segment(p)) for p in segments]
    return recompose(
        warped, eb, fs, t_ref=t_ref, template_id=getattr(template, "id", None)
    )
