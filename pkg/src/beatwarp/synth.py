"""Synthetic heartbeat records with known ground truth.

Beats are sums of Gaussian bumps laid out over one RR interval in
normalized beat time: an early low bump (P), a narrow tall complex
(Q/R/S) at 0.4, and a broad late bump (T). Each rendered beat gets a
smooth monotone time warp and an amplitude scale, so consecutive beats
share morphology without being copies. Peak locations of the warped
bumps are computed analytically, giving exact annotation and wave-mark
times to score detectors against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sampler import UniformSignal

__all__ = [
    "BeatShape",
    "DEFAULT_SHAPE",
    "ALT_SHAPE",
    "beat_values",
    "template_values",
    "SynthRecord",
    "make_record",
]


@dataclass(frozen=True)
class BeatShape:
    """Bump layout of one morphology, with named peak centers.

    ``bumps`` is a tuple of (center, amplitude, width) in normalized
    beat time; ``p_center``/``r_center``/``t_center`` name the bumps
    whose peaks serve as wave marks and QRS annotation.
    """

    bumps: tuple[tuple[float, float, float], ...]
    p_center: float
    r_center: float
    t_center: float


DEFAULT_SHAPE = BeatShape(
    bumps=(
        (0.25, 0.12, 0.030),
        (0.385, -0.12, 0.010),
        (0.40, 1.0, 0.012),
        (0.415, -0.18, 0.012),
        (0.62, 0.32, 0.055),
    ),
    p_center=0.25,
    r_center=0.40,
    t_center=0.62,
)

# a visibly different morphology: wider complex, earlier P, taller late bump
ALT_SHAPE = BeatShape(
    bumps=(
        (0.20, 0.18, 0.040),
        (0.375, -0.08, 0.012),
        (0.40, 0.65, 0.022),
        (0.43, -0.25, 0.015),
        (0.66, 0.45, 0.070),
    ),
    p_center=0.20,
    r_center=0.40,
    t_center=0.66,
)


def beat_values(tau, shape: BeatShape = DEFAULT_SHAPE) -> np.ndarray:
    """Evaluate one beat at normalized times tau (0 to 1 spans the beat)."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    for c, a, w in shape.bumps:
        out += a * np.exp(-((tau - c) ** 2) / (2.0 * w * w))
    return out


def template_values(
    fs: float, rr_s: float = 1.0, shape: BeatShape = DEFAULT_SHAPE
) -> np.ndarray:
    """One undeformed beat sampled at fs over [0, rr_s)."""
    n = int(round(rr_s * fs))
    if n < 2:
        raise ValueError("beat must span at least two samples")
    return beat_values(np.arange(n) / fs / rr_s, shape)


def _unwarp(c: float, a: float) -> float:
    """Solve x + a*sin(pi*x) = c for x by fixed-point iteration.

    The warp is strictly increasing for |a|*pi < 1, so the solution is
    unique; the iteration contracts at rate |a|*pi.
    """
    x = c
    for _ in range(80):
        x = c - a * np.sin(np.pi * x)
    return float(x)


@dataclass(frozen=True)
class SynthRecord:
    """A rendered record plus its ground truth."""

    signal: UniformSignal
    qrs_times: np.ndarray
    p_times: np.ndarray
    t_times: np.ndarray
    rr_s: float
    switch_at: Optional[int] = None


def make_record(
    n_beats: int,
    fs: float = 128.0,
    rr_s: float = 1.0,
    seed: int = 0,
    warp_amp: float = 0.04,
    amp_jitter: float = 0.1,
    noise_rms: float = 0.0,
    shape: BeatShape = DEFAULT_SHAPE,
    alt_shape: Optional[BeatShape] = None,
    switch_at: Optional[int] = None,
) -> SynthRecord:
    """Render n_beats deformed copies of a morphology into one record.

    Beat k occupies [k*rr_s, (k+1)*rr_s); its time axis is warped by
    tau + a*sin(pi*tau) with a drawn per beat from warp_amp*U(-1,1), and
    its amplitude scaled by 1 + amp_jitter*U(-1,1). With ``switch_at``
    set, beats from that index on use ``alt_shape`` instead, producing a
    morphology change mid-record. Mark times are the analytically warped
    peak centers; additive noise (``noise_rms`` > 0) does not move them.
    """
    if n_beats < 1:
        raise ValueError("need at least one beat")
    if switch_at is not None and alt_shape is None:
        raise ValueError("switch_at requires alt_shape")
    if abs(warp_amp) * np.pi >= 1.0:
        raise ValueError("warp amplitude too large for a monotone warp")
    rng = np.random.default_rng(seed)
    n = int(round(n_beats * rr_s * fs))
    t = np.arange(n) / fs
    values = np.zeros(n)
    qrs, p_marks, t_marks = [], [], []
    for k in range(n_beats):
        lo = int(round(k * rr_s * fs))
        hi = int(round((k + 1) * rr_s * fs))
        sh = alt_shape if (switch_at is not None and k >= switch_at) else shape
        a = warp_amp * rng.uniform(-1.0, 1.0)
        g = 1.0 + amp_jitter * rng.uniform(-1.0, 1.0)
        tau = (t[lo:hi] - k * rr_s) / rr_s
        values[lo:hi] = g * beat_values(tau + a * np.sin(np.pi * tau), sh)
        base = k * rr_s
        qrs.append(base + rr_s * _unwarp(sh.r_center, a))
        p_marks.append(base + rr_s * _unwarp(sh.p_center, a))
        t_marks.append(base + rr_s * _unwarp(sh.t_center, a))
    if noise_rms > 0.0:
        values = values + noise_rms * rng.standard_normal(n)
    return SynthRecord(
        signal=UniformSignal(values=values, fs=fs, t0=0.0),
        qrs_times=np.array(qrs),
        p_times=np.array(p_marks),
        t_times=np.array(t_marks),
        rr_s=float(rr_s),
        switch_at=switch_at,
    )
