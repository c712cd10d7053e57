"""Digital level-crossing acquisition over uniformly sampled signals.

The comparator grid has 2**bits levels spread evenly over [v_min, v_max]
(spacing (v_max - v_min) / (2**bits - 1)). Walking the uniform samples,
every grid level reached or passed between two consecutive samples emits
one event; timestamps snap to the sample that closes the interval, so a
swing across several levels yields several events sharing a timestamp,
ordered by traversal direction. An initial event pinned to the nearest
level of the first sample opens every stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["UniformSignal", "LevelGrid", "EventSample", "lc_sample", "srf"]


@dataclass(frozen=True)
class UniformSignal:
    """Uniformly sampled signal: values at t0 + k / fs."""

    values: np.ndarray
    fs: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) == 0:
            raise ValueError("signal needs a non-empty 1-d value array")
        if not self.fs > 0:
            raise ValueError("fs must be positive")

    def __len__(self) -> int:
        return len(self.values)

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.values)) / self.fs

    @property
    def duration(self) -> float:
        return (len(self.values) - 1) / self.fs


@dataclass(frozen=True)
class LevelGrid:
    """Comparator level grid: 2**bits levels over [v_min, v_max]."""

    bits: int
    v_min: float
    v_max: float

    def __post_init__(self) -> None:
        if int(self.bits) != self.bits or self.bits < 1:
            raise ValueError("bits must be an integer >= 1")
        if not self.v_max > self.v_min:
            raise ValueError("v_max must exceed v_min")

    @property
    def n_levels(self) -> int:
        return 2 ** self.bits

    @property
    def step(self) -> float:
        return (self.v_max - self.v_min) / (self.n_levels - 1)

    def levels(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.n_levels)

    def nearest_index(self, v: float) -> int:
        """Index of the closest level; exact midpoints round upward."""
        idx = int(np.floor((v - self.v_min) / self.step + 0.5))
        return min(max(idx, 0), self.n_levels - 1)


@dataclass(frozen=True)
class EventSample:
    """One acquisition event: level value v seen at time t.

    ``synthetic`` marks events inserted by beat slicing rather than the
    comparator.
    """

    t: float
    v: float
    synthetic: bool = False


def lc_sample(signal: UniformSignal, grid: LevelGrid) -> list[EventSample]:
    """Simulate level-crossing acquisition of a uniform signal.

    Values are clamped to the grid range first. Returns the event stream
    in emission order; timestamps are nondecreasing, with ties only among
    events emitted from the same inter-sample interval.
    """
    levels = grid.levels()
    x = np.clip(signal.values, grid.v_min, grid.v_max)
    tol = 1e-12 * max(1.0, grid.v_max - grid.v_min)
    cur = grid.nearest_index(float(x[0]))
    events = [EventSample(t=float(signal.t0), v=float(levels[cur]))]
    n_levels = grid.n_levels
    for k in range(1, len(x)):
        b = float(x[k])
        t = signal.t0 + k / signal.fs
        while cur + 1 < n_levels and b >= levels[cur + 1] - tol:
            cur += 1
            events.append(EventSample(t=float(t), v=float(levels[cur])))
        while cur - 1 >= 0 and b <= levels[cur - 1] + tol:
            cur -= 1
            events.append(EventSample(t=float(t), v=float(levels[cur])))
    return events


def srf(n_uniform: int, n_events: int) -> float:
    """Sample reduction factor: (n_uniform - n_events) / n_uniform.

    Negative when the event stream outgrew the uniform sampling.
    """
    if n_uniform <= 0:
        raise ValueError("n_uniform must be positive")
    if n_events < 0:
        raise ValueError("n_events must be >= 0")
    return (n_uniform - n_events) / n_uniform
