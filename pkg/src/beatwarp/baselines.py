"""Classical event-to-uniform resampling baselines.

All three interpolate the events of one beat back onto the uniform window
grid: zero-order hold, piecewise-linear, and a C1 piecewise-quadratic
spline built segment by segment. Tied event timestamps (multi-level
swings) collapse to the latest value at that instant.
"""

from __future__ import annotations

import warnings

import numpy as np

from .segmentation import EventBeat, UniformBeat, window_grid

__all__ = ["sample_hold", "linear_interp", "quad_spline"]


def _event_arrays(beat: EventBeat) -> tuple[np.ndarray, np.ndarray]:
    t = beat.times()
    v = beat.values()
    if len(t) == 0:
        raise ValueError("beat has no events")
    if np.any(np.diff(t) < 0):
        raise ValueError("event timestamps must be nondecreasing")
    return t, v


def _dedupe_keep_last(t: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = np.append(np.diff(t) > 0, True)
    return t[keep], v[keep]


def _wrap(values, beat: EventBeat, fs: float, grid: np.ndarray) -> UniformBeat:
    return UniformBeat(
        values=np.asarray(values, dtype=float),
        fs=fs,
        window=beat.window,
        qrs_time=beat.qrs_time,
        t_first=float(grid[0]),
    )


def sample_hold(beat: EventBeat, fs: float, t_ref: float | None = None) -> UniformBeat:
    """Zero-order hold: each grid point takes the latest event value.

    A grid point landing exactly on an event timestamp takes the new
    value; grid points before the first event hold the first value.
    """
    t, v = _event_arrays(beat)
    grid = window_grid(beat.window, fs, t_ref)
    idx = np.searchsorted(t, grid + 1e-9, side="right") - 1
    idx = np.clip(idx, 0, len(t) - 1)
    return _wrap(v[idx], beat, fs, grid)


def linear_interp(beat: EventBeat, fs: float, t_ref: float | None = None) -> UniformBeat:
    """Piecewise-linear interpolation through the events."""
    t, v = _event_arrays(beat)
    grid = window_grid(beat.window, fs, t_ref)
    if len(t) < 2:
        warnings.warn("fewer than 2 events; falling back to sample-hold")
        return _wrap(np.full(len(grid), v[0]), beat, fs, grid)
    tu, vu = _dedupe_keep_last(t, v)
    return _wrap(np.interp(grid, tu, vu), beat, fs, grid)


def quad_spline(beat: EventBeat, fs: float, t_ref: float | None = None) -> UniformBeat:
    """C1 quadratic spline through the events, built segment-forward.

    Each segment is the parabola matching both endpoint values and the
    incoming slope; the outgoing slope 2*secant - incoming feeds the next
    segment. The opening slope is the derivative at t0 of the parabola
    through the first three events, which makes events sampled from a
    parabola reproduce it exactly. The forward recursion is what makes
    this baseline overshoot wildly when dense event bursts hand a steep
    slope to a long sparse segment.

    Fewer than 3 distinct-time events fall back to linear interpolation
    (with a warning), which itself falls back to a hold below 2.
    """
    t, v = _event_arrays(beat)
    tu, vu = _dedupe_keep_last(t, v)
    if len(tu) < 3:
        warnings.warn("fewer than 3 events; falling back to linear interpolation")
        return linear_interp(beat, fs, t_ref)
    grid = window_grid(beat.window, fs, t_ref)
    # opening slope: d/dt at tu[0] of the parabola through the first three events
    t0, t1, t2 = tu[:3]
    v0, v1, v2 = vu[:3]
    s = (
        v0 * (2 * t0 - t1 - t2) / ((t0 - t1) * (t0 - t2))
        + v1 * (t0 - t2) / ((t1 - t0) * (t1 - t2))
        + v2 * (t0 - t1) / ((t2 - t0) * (t2 - t1))
    )
    n_seg = len(tu) - 1
    slopes = np.empty(n_seg)
    curvs = np.empty(n_seg)
    for k in range(n_seg):
        dt = tu[k + 1] - tu[k]
        secant = (vu[k + 1] - vu[k]) / dt
        slopes[k] = s
        curvs[k] = (secant - s) / dt
        s = 2.0 * secant - s
    seg = np.clip(np.searchsorted(tu, grid, side="right") - 1, 0, n_seg - 1)
    tau = grid - tu[seg]
    out = vu[seg] + slopes[seg] * tau + curvs[seg] * tau * tau
    return _wrap(out, beat, fs, grid)
