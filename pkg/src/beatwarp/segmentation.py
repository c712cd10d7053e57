"""Slicing records into per-beat windows around QRS annotations.

A beat window runs from 40% of the local RR interval before the QRS time
to 60% after it; the first beat borrows the following interval. When an
irregular rhythm makes a window run into the next one, the earlier window
is truncated, which keeps windows disjoint. A rhythm that slows down can
leave gaps between windows; events falling in a gap belong to no beat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampler import EventSample, UniformSignal

__all__ = [
    "beat_windows",
    "window_grid",
    "EventBeat",
    "UniformBeat",
    "slice_events",
    "slice_uniform",
    "segment_events",
    "segment_uniform",
]

_T_TOL = 1e-9


def beat_windows(qrs_times) -> list[tuple[float, float]]:
    """Per-beat (t_start, t_end) windows around each QRS time.

    Needs at least two annotations (the first beat has no preceding
    interval and uses the following one instead).
    """
    q = np.asarray(qrs_times, dtype=float)
    if q.ndim != 1 or len(q) < 2:
        raise ValueError("need at least two QRS annotations")
    if not np.all(np.diff(q) > 0):
        raise ValueError("QRS annotations must be strictly increasing")
    rr = np.empty(len(q))
    rr[1:] = np.diff(q)
    rr[0] = rr[1]
    starts = q - 0.4 * rr
    ends = q + 0.6 * rr
    for k in range(len(q) - 1):
        if ends[k] > starts[k + 1]:
            ends[k] = starts[k + 1]
    return [(float(s), float(e)) for s, e in zip(starts, ends)]


def window_grid(
    window: tuple[float, float], fs: float, t_ref: float | None = None
) -> np.ndarray:
    """Uniform timestamps covering [t_start, t_end) at rate fs.

    With ``t_ref`` the grid snaps onto the t_ref + k/fs lattice (use the
    source record's t0 so sliced originals and reconstructions line up);
    without it the grid starts at t_start.
    """
    t_start, t_end = window
    if not t_end > t_start:
        raise ValueError("window must have positive span")
    if t_ref is None:
        n = int(round((t_end - t_start) * fs))
        return t_start + np.arange(n) / fs
    k0 = int(np.ceil((t_start - t_ref) * fs - _T_TOL))
    k1 = int(np.ceil((t_end - t_ref) * fs - _T_TOL))
    return t_ref + np.arange(k0, k1) / fs


@dataclass(frozen=True)
class EventBeat:
    """Events of one beat window, boundary anchors guaranteed.

    ``events`` always starts at t_start and ends at t_end; when the stream
    had no event exactly on a boundary, a zero-valued synthetic anchor is
    inserted there.
    """

    events: list[EventSample]
    window: tuple[float, float]
    qrs_time: float

    def times(self) -> np.ndarray:
        return np.array([e.t for e in self.events])

    def values(self) -> np.ndarray:
        return np.array([e.v for e in self.events])

    @property
    def n_real(self) -> int:
        return sum(1 for e in self.events if not e.synthetic)


@dataclass(frozen=True)
class UniformBeat:
    """Uniform samples of one beat window on the source record grid."""

    values: np.ndarray
    fs: float
    window: tuple[float, float]
    qrs_time: float
    t_first: float
    clipped: bool = False

    def times(self) -> np.ndarray:
        return self.t_first + np.arange(len(self.values)) / self.fs


def _default_qrs(window: tuple[float, float]) -> float:
    # inverse of the window rule: the QRS sits 40% into the span
    return window[0] + 0.4 * (window[1] - window[0])


def slice_events(
    stream,
    window: tuple[float, float],
    qrs_time: float | None = None,
    include_end: bool = False,
) -> EventBeat:
    """Events of a window, synthetic zero anchors added at open boundaries.

    Membership is t_start <= t < t_end; pass ``include_end`` for a closed
    end (the record's final beat). An event landing exactly on t_end is
    otherwise owned by the next window, and this beat closes with a
    synthetic anchor instead.
    """
    t_start, t_end = window
    if not t_end > t_start:
        raise ValueError("window must have positive span")
    kept = [
        e
        for e in stream
        if t_start - _T_TOL <= e.t and (e.t <= t_end + _T_TOL if include_end else e.t < t_end - _T_TOL)
    ]
    if not kept or abs(kept[0].t - t_start) > _T_TOL:
        kept.insert(0, EventSample(t=float(t_start), v=0.0, synthetic=True))
    if abs(kept[-1].t - t_end) > _T_TOL:
        kept.append(EventSample(t=float(t_end), v=0.0, synthetic=True))
    return EventBeat(
        events=kept,
        window=(float(t_start), float(t_end)),
        qrs_time=float(qrs_time) if qrs_time is not None else _default_qrs(window),
    )


def slice_uniform(
    signal: UniformSignal, window: tuple[float, float], qrs_time: float | None = None
) -> UniformBeat:
    """Samples of the record falling in [t_start, t_end).

    Slices on the record's own grid. Windows sticking out of the record
    are clipped (flagged); a window entirely outside is an error.
    """
    t_start, t_end = window
    if not t_end > t_start:
        raise ValueError("window must have positive span")
    k0 = int(np.ceil((t_start - signal.t0) * signal.fs - _T_TOL))
    k1 = int(np.ceil((t_end - signal.t0) * signal.fs - _T_TOL))
    clipped = k0 < 0 or k1 > len(signal)
    k0c = max(k0, 0)
    k1c = min(k1, len(signal))
    if k1c <= k0c:
        raise ValueError("window lies outside the record")
    return UniformBeat(
        values=signal.values[k0c:k1c].copy(),
        fs=signal.fs,
        window=(float(t_start), float(t_end)),
        qrs_time=float(qrs_time) if qrs_time is not None else _default_qrs(window),
        t_first=signal.t0 + k0c / signal.fs,
        clipped=bool(clipped),
    )


def segment_events(stream, qrs_times) -> list[EventBeat]:
    """Slice a whole event stream into beats; the last window is closed."""
    windows = beat_windows(qrs_times)
    out = []
    for k, w in enumerate(windows):
        out.append(
            slice_events(
                stream,
                w,
                qrs_time=float(qrs_times[k]),
                include_end=(k == len(windows) - 1),
            )
        )
    return out


def segment_uniform(signal: UniformSignal, qrs_times) -> list[UniformBeat]:
    """Slice a whole record into uniform beats."""
    windows = beat_windows(qrs_times)
    return [
        slice_uniform(signal, w, qrs_time=float(qrs_times[k]))
        for k, w in enumerate(windows)
    ]
