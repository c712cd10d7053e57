"""Alignment kernels: DTW, derivative DTW, and time-weighted derivative DTW.

All three share one accumulation recurrence over a cell-cost table,

    D[i, j] = cost[i, j] + min(D[i, j-1], D[i-1, j-1], D[i-1, j])

with D[0, 0] = cost[0, 0] and the borders accumulated along the edges
(equivalently: an infinite virtual border except a zero corner). The
reported distance is D[N-1, M-1]; the warping path is backtracked from
that corner with ties resolved diagonal first, then vertical (i-1, j),
then horizontal (i, j-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from numba import njit

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .segmentation import EventBeat

__all__ = [
    "SeriesView",
    "WarpResult",
    "MatchOutcome",
    "dtw",
    "derivative",
    "ii_ddtw",
    "event_series",
    "template_series",
    "rank_templates",
]

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class SeriesView:
    """A value series on a normalized time base.

    ``t`` is strictly increasing with t[0] == 0 and t[-1] == 1 (unit span);
    ``v`` holds the values in their original units. Use :func:`series_view`
    or the classmethod to normalize raw timestamps.
    """

    v: np.ndarray
    t: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.v, dtype=float)
        t = np.asarray(self.t, dtype=float)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", t)
        if v.ndim != 1 or t.ndim != 1 or len(v) != len(t):
            raise ValueError("series needs matching 1-d value and time arrays")
        if len(v) < 2:
            raise ValueError("series needs at least two points")
        if not np.all(np.diff(t) > 0):
            raise ValueError("series timestamps must be strictly increasing")

    @classmethod
    def from_times(cls, t: Iterable[float], v: Iterable[float]) -> "SeriesView":
        """Build a view from raw timestamps, normalizing them to [0, 1]."""
        t = np.asarray(list(t), dtype=float)
        v = np.asarray(list(v), dtype=float)
        if len(t) < 2:
            raise ValueError("series needs at least two points")
        span = t[-1] - t[0]
        if span <= 0:
            raise ValueError("series must span a positive time interval")
        return cls(v=v, t=(t - t[0]) / span)

    @property
    def normalized(self) -> bool:
        return (
            abs(self.t[0]) <= _NORM_TOL
            and abs(self.t[-1] - 1.0) <= _NORM_TOL
        )


@dataclass(frozen=True)
class WarpResult:
    """Alignment distance plus the backtracked warping path.

    ``path`` is an ordered list of (i, j) index pairs from (0, 0) to
    (N-1, M-1); consecutive steps move by (1, 0), (0, 1) or (1, 1).
    """

    distance: float
    path: list[tuple[int, int]]


@njit(cache=True, nogil=True)
def _accumulate(cost):  # pragma: no cover - exercised through the wrappers
    n, m = cost.shape
    acc = np.empty((n, m))
    acc[0, 0] = cost[0, 0]
    for j in range(1, m):
        acc[0, j] = cost[0, j] + acc[0, j - 1]
    for i in range(1, n):
        acc[i, 0] = cost[i, 0] + acc[i - 1, 0]
        for j in range(1, m):
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost[i, j] + best
    return acc


def _backtrack(acc: np.ndarray) -> list[tuple[int, int]]:
    i = acc.shape[0] - 1
    j = acc.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag = acc[i - 1, j - 1]
            vert = acc[i - 1, j]
            horz = acc[i, j - 1]
            if diag <= vert and diag <= horz:
                i -= 1
                j -= 1
            elif vert <= horz:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    return path


def _warp(cost: np.ndarray) -> WarpResult:
    acc = _accumulate(np.ascontiguousarray(cost, dtype=float))
    return WarpResult(distance=float(acc[-1, -1]), path=_backtrack(acc))


def dtw(v1: Sequence[float], v2: Sequence[float]) -> WarpResult:
    """Plain dynamic time warping between two value sequences.

    Parameters
    ----------
    v1, v2 : array_like
        Non-empty 1-d value sequences.

    Returns
    -------
    WarpResult
        Total |v1[i] - v2[j]| cost along the optimal monotone path, and
        the path itself.
    """
    a = np.asarray(v1, dtype=float)
    b = np.asarray(v2, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or len(a) == 0 or len(b) == 0:
        raise ValueError("dtw needs two non-empty 1-d sequences")
    cost = np.abs(a[:, None] - b[None, :])
    return _warp(cost)


def derivative(series: SeriesView) -> np.ndarray:
    """Backward-difference slope estimate of a series.

    d[i] = (v[i] - v[i-1]) / (t[i] - t[i-1]) for i >= 1; d[0] repeats d[1]
    so the array keeps the series length. Duplicate timestamps are rejected
    (the series constructor already enforces strict increase).
    """
    dt = np.diff(series.t)
    if np.any(dt <= 0):
        raise ValueError("derivative needs strictly increasing timestamps")
    d = np.empty(len(series.v))
    d[1:] = np.diff(series.v) / dt
    d[0] = d[1]
    return d


def ii_ddtw(s1: SeriesView, s2: SeriesView, lam: float = 1.0) -> WarpResult:
    """Derivative DTW with a time-mismatch penalty factor.

    Cell cost is ``(1 + lam * |t1[i] - t2[j]|) * |d1[i] - d2[j]|`` over
    backward-difference derivatives, so matches between points far apart
    on the (normalized) time axis are discouraged. ``lam = 0`` reduces to
    derivative DTW.

    Parameters
    ----------
    s1, s2 : SeriesView
        Series with unit-span normalized time bases (otherwise an error:
        the time penalty is meaningless across unaligned clocks).
    lam : float
        Non-negative time-mismatch weight.

    Returns
    -------
    WarpResult
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if not s1.normalized or not s2.normalized:
        raise ValueError("ii_ddtw needs unit-span normalized time bases")
    d1 = derivative(s1)
    d2 = derivative(s2)
    cost = (1.0 + lam * np.abs(s1.t[:, None] - s2.t[None, :])) * np.abs(
        d1[:, None] - d2[None, :]
    )
    return _warp(cost)


def event_series(beat: "EventBeat", fs: float) -> SeriesView:
    """Matching view of an event beat: de-tied timestamps, normalized.

    Multi-level crossings share a snapped timestamp; the derivative needs
    distinct times, so a group of g tied events is spread backwards inside
    its detection interval at steps of (1/fs)/(g+1), the last event keeping
    the recorded time. Event order and values are untouched.
    """
    if fs <= 0:
        raise ValueError("fs must be positive")
    t = np.array([e.t for e in beat.events], dtype=float)
    v = np.array([e.v for e in beat.events], dtype=float)
    if len(t) < 2:
        raise ValueError("event beat needs at least two events to match")
    if np.any(np.diff(t) < 0):
        raise ValueError("event timestamps must be nondecreasing")
    out = t.copy()
    i = 0
    while i < len(t):
        j = i
        while j + 1 < len(t) and t[j + 1] == t[i]:
            j += 1
        g = j - i + 1
        if g > 1:
            step = (1.0 / fs) / (g + 1)
            for k in range(i, j + 1):
                out[k] = t[i] - (j - k) * step
        i = j + 1
    return SeriesView.from_times(out, v)


def template_series(values: Sequence[float]) -> SeriesView:
    """Template view: uniform samples on a [0, 1] normalized time base."""
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        raise ValueError("template needs at least two samples")
    return SeriesView(v=v, t=np.linspace(0.0, 1.0, len(v)))


@dataclass(frozen=True)
class MatchOutcome:
    """Best template for a beat plus the full distance ranking."""

    template_id: int
    warp: WarpResult
    distances: dict[int, float] = field(default_factory=dict)


def rank_templates(beat: "EventBeat", templates, lam: float = 1.0) -> MatchOutcome:
    """Match a beat against every template and keep the closest.

    ``templates`` is any iterable of objects with ``id``, ``values`` and
    ``fs`` attributes (a TemplatesSet works). Distances come from
    :func:`ii_ddtw`; ties on distance resolve to the lowest template id.
    Evaluations are independent per template, so they could run in
    parallel; the reduction below is by ascending id either way, which
    keeps the outcome identical to this sequential loop.
    """
    items = sorted(templates, key=lambda tp: tp.id)
    if not items:
        raise ValueError("empty template set")
    view = event_series(beat, items[0].fs)
    best: tuple[float, int] | None = None
    best_warp: WarpResult | None = None
    distances: dict[int, float] = {}
    for tp in items:
        res = ii_ddtw(view, template_series(tp.values), lam=lam)
        distances[tp.id] = res.distance
        if best is None or res.distance < best[0]:
            best = (res.distance, tp.id)
            best_warp = res
    assert best is not None and best_warp is not None
    return MatchOutcome(template_id=best[1], warp=best_warp, distances=distances)
