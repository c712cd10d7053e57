"""Grouping acquired beats into morphology clusters and picking templates.

Beats are min-max normalized, compared pairwise with plain DTW, and
clustered by affinity propagation on the negated distances (exemplars are
actual beats, so no averaging smears morphology). Tiny clusters are
dropped; each surviving cluster contributes the member closest to its
exemplar that still looks clean enough, judged by a median-filter SNR.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.ndimage

from .segmentation import UniformBeat
from .warping import dtw

__all__ = [
    "minmax_normalize",
    "minmax_invert",
    "pairwise_dtw",
    "ClusterOutcome",
    "affinity_propagation",
    "snr_estimate",
    "Template",
    "ClusterCandidate",
    "filter_centroids",
    "build_candidates",
]


def minmax_normalize(values) -> tuple[np.ndarray, float, float]:
    """Map values onto [0, 1]; returns (normalized, offset, scale).

    ``normalized * scale + offset`` restores the input. Constant arrays
    have no span to normalize and are rejected; callers flag and skip
    those beats.
    """
    v = np.asarray(values, dtype=float)
    lo = float(np.min(v))
    hi = float(np.max(v))
    if hi == lo:
        raise ValueError("constant beat cannot be min-max normalized")
    return (v - lo) / (hi - lo), lo, hi - lo


def minmax_invert(normalized, offset: float, scale: float) -> np.ndarray:
    return np.asarray(normalized, dtype=float) * scale + offset


def pairwise_dtw(series: list[np.ndarray], workers: int = 1) -> np.ndarray:
    """Symmetric DTW distance matrix over a list of sequences.

    Index pairs are independent, so they map over a thread pool when
    ``workers`` > 1 (the accumulation kernel releases the GIL); results
    are written by pair index and identical to the sequential order.
    """
    n = len(series)
    out = np.zeros((n, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def one(pair):
        i, j = pair
        return i, j, dtw(series[i], series[j]).distance

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, pairs))
    else:
        results = [one(p) for p in pairs]
    for i, j, d in results:
        out[i, j] = d
        out[j, i] = d
    return out


@dataclass(frozen=True)
class ClusterOutcome:
    """Affinity propagation result on a beat batch.

    ``exemplars`` are indices into the batch; ``assignment[i]`` is the
    exemplar index each beat belongs to; ``within_dists`` maps exemplar
    index to the members' distances to it (exemplar included, at 0).
    """

    exemplars: list[int]
    assignment: np.ndarray
    within_dists: dict[int, np.ndarray]
    converged: bool


def affinity_propagation(
    similarity: np.ndarray,
    preference: float | None = None,
    damping: float = 0.9,
    max_iter: int = 1000,
    convergence_iter: int = 50,
) -> ClusterOutcome:
    """Exemplar selection by damped responsibility/availability passing.

    Parameters
    ----------
    similarity : ndarray
        Square similarity matrix (higher = more alike). For beat
        clustering this is the negated DTW distance matrix.
    preference : float, optional
        Self-similarity placed on the diagonal, the same for every point;
        defaults to the median of the off-diagonal similarities.
    damping : float
        Blend factor carrying old messages forward, in [0.5, 1).
    max_iter, convergence_iter : int
        Iteration cap and the number of stable iterations that count as
        convergence.

    Exemplars are always dataset members. Without convergence the last
    exemplar set is returned with a warning and ``converged=False``; if no
    point ever accumulates positive evidence the single best point is the
    exemplar. Deterministic: the eps-scale jitter that breaks message
    symmetries is drawn from a fixed seed, so a given input always yields
    the same exemplars.
    """
    s = np.array(similarity, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("similarity must be square")
    if not 0.5 <= damping < 1.0:
        raise ValueError("damping must be in [0.5, 1)")
    n = s.shape[0]
    if n == 1:
        return ClusterOutcome([0], np.zeros(1, dtype=int), {0: np.zeros(1)}, True)
    off = s[~np.eye(n, dtype=bool)]
    if preference is None:
        preference = float(np.median(off))
    if np.all(off == off[0]):
        # fully degenerate: every pair equally alike, messages carry no
        # information. One exemplar serves everyone unless isolation pays.
        if preference > off[0]:
            return ClusterOutcome(
                list(range(n)),
                np.arange(n),
                {i: np.zeros(1) for i in range(n)},
                True,
            )
        d = np.full(n, -off[0])
        d[0] = 0.0
        return ClusterOutcome([0], np.zeros(n, dtype=int), {0: d}, True)
    np.fill_diagonal(s, preference)
    # remove degeneracies: exactly-tied similarities (and preferences) leave
    # the message dynamics stuck on symmetric deadlocks, so perturb at the
    # last-bit scale. Seed fixed for reproducibility.
    jitter = np.random.RandomState(0).standard_normal((n, n))
    s += (np.finfo(float).eps * s + np.finfo(float).tiny * 100.0) * jitter

    r = np.zeros((n, n))
    a = np.zeros((n, n))
    idx = np.arange(n)
    stable = 0
    last: tuple[int, ...] | None = None
    converged = False
    for _ in range(max_iter):
        # responsibilities: how much i wants k over the runner-up
        as_ = a + s
        best_k = np.argmax(as_, axis=1)
        best = as_[idx, best_k]
        as_[idx, best_k] = -np.inf
        second = np.max(as_, axis=1)
        r_new = s - best[:, None]
        r_new[idx, best_k] = s[idx, best_k] - second
        r = damping * r + (1.0 - damping) * r_new

        # availabilities: support k has gathered from everyone else
        rp = np.maximum(r, 0.0)
        np.fill_diagonal(rp, r.diagonal())
        col = rp.sum(axis=0)
        a_new = np.minimum(0.0, col[None, :] - rp)
        a_new[idx, idx] = col - r.diagonal()
        a = damping * a + (1.0 - damping) * a_new

        exemplars = tuple(np.flatnonzero((r.diagonal() + a.diagonal()) > 0))
        if exemplars and exemplars == last:
            stable += 1
            if stable >= convergence_iter:
                converged = True
                break
        else:
            stable = 0
        last = exemplars

    evidence = r.diagonal() + a.diagonal()
    ex = np.flatnonzero(evidence > 0)
    if ex.size == 0:
        ex = np.array([int(np.argmax(evidence))])
    if not converged:
        warnings.warn("affinity propagation did not converge; using last exemplar set")

    # refine each exemplar to its cluster's similarity medoid, then reassign
    labels = np.argmax(s[:, ex], axis=1)
    labels[ex] = np.arange(ex.size)
    for k in range(ex.size):
        members = np.flatnonzero(labels == k)
        ex[k] = members[np.argmax(s[members[:, None], members].sum(axis=0))]
    ex = np.unique(ex)
    assignment = ex[np.argmax(s[:, ex], axis=1)]
    assignment[ex] = ex  # exemplars represent themselves

    within = {}
    for e in ex:
        members = np.flatnonzero(assignment == e)
        d = -s[members, e]
        d[members == e] = 0.0  # diagonal holds the preference, not a distance
        within[int(e)] = d
    return ClusterOutcome([int(e) for e in ex], assignment, within, converged)


def cluster_beats(
    distances: np.ndarray,
    preference: float | None = None,
    damping: float = 0.9,
    max_iter: int = 1000,
    convergence_iter: int = 50,
) -> ClusterOutcome:
    """Affinity propagation on a DTW distance matrix (similarity = -d)."""
    return affinity_propagation(
        -np.asarray(distances, dtype=float),
        preference=preference,
        damping=damping,
        max_iter=max_iter,
        convergence_iter=convergence_iter,
    )


def snr_estimate(values, fs: float | None = None, window_s: float = 0.024) -> float:
    """Signal-to-noise ratio against a median-filtered version of a beat.

    Accepts a plain array plus ``fs``, or any beat object carrying
    ``.values`` and ``.fs``. The filter window is round(window_s * fs)
    samples, forced odd. Noise is the residual; the ratio of mean powers
    is reported in dB, +inf for a zero residual.
    """
    if hasattr(values, "values") and hasattr(values, "fs"):
        fs = float(values.fs)
        values = values.values
    if fs is None:
        raise ValueError("fs required when passing a bare array")
    v = np.asarray(values, dtype=float)
    if fs <= 0:
        raise ValueError("fs must be positive")
    w = int(round(window_s * fs))
    if w % 2 == 0:
        w += 1
    w = max(w, 1)
    if len(v) <= w:
        raise ValueError("beat shorter than the filter window")
    est = scipy.ndimage.median_filter(v, size=w, mode="nearest")
    noise = v - est
    p_noise = float(np.mean(noise**2))
    if p_noise == 0.0:
        return float("inf")
    p_sig = float(np.mean(est**2))
    return 10.0 * float(np.log10(p_sig / p_noise))


@dataclass(frozen=True)
class Template:
    """A stored heartbeat morphology: raw values of one real beat."""

    id: int
    values: np.ndarray
    fs: float
    source_beat: int
    cluster_mean_d: float
    cluster_std_d: float


@dataclass(frozen=True)
class ClusterCandidate:
    """One surviving cluster offered to the template set update.

    Carries the chosen template, the cluster centroid (normalized
    exemplar beat), every member's distance to it, and the template's own
    distance from the centroid.
    """

    id: int
    template: Template
    centroid: np.ndarray
    member_dists: np.ndarray
    template_dist: float
    size: int

    @property
    def threshold(self) -> float:
        """Mean plus one standard deviation of the member distances."""
        return float(np.mean(self.member_dists) + np.std(self.member_dists))


def filter_centroids(
    outcome: ClusterOutcome,
    beats: list[UniformBeat],
    normalized: list[np.ndarray],
    distances: np.ndarray,
    min_frac: float = 0.05,
    snr_db: float = 17.0,
    snr_window_s: float = 0.024,
) -> list[ClusterCandidate]:
    """Turn clusters into template candidates.

    Clusters smaller than ``min_frac`` of the batch are dropped. Within
    each survivor, members are tried nearest-to-exemplar first and the
    first one whose raw-signal SNR clears ``snr_db`` becomes the
    template; a cluster with no clean member yields none. No candidate at
    all is an error: the acquisition window was too dirty and a longer
    one is needed.
    """
    n = len(beats)
    out: list[ClusterCandidate] = []
    for e in outcome.exemplars:
        members = np.flatnonzero(outcome.assignment == e)
        if len(members) < min_frac * n:
            continue
        order = members[np.argsort(distances[members, e], kind="stable")]
        chosen = None
        for m in order:
            if snr_estimate(beats[m].values, beats[m].fs, snr_window_s) >= snr_db:
                chosen = int(m)
                break
        if chosen is None:
            continue
        out.append(
            ClusterCandidate(
                id=int(e),
                template=Template(
                    id=int(e),
                    values=beats[chosen].values.copy(),
                    fs=beats[chosen].fs,
                    source_beat=chosen,
                    cluster_mean_d=float(np.mean(distances[members, e])),
                    cluster_std_d=float(np.std(distances[members, e])),
                ),
                centroid=normalized[e].copy(),
                member_dists=distances[members, e].copy(),
                template_dist=float(distances[chosen, e]),
                size=len(members),
            )
        )
    if not out:
        raise ValueError(
            "no cluster produced a usable template; acquire a longer window"
        )
    return out


def build_candidates(
    beats: list[UniformBeat],
    preference: float | None = None,
    damping: float = 0.9,
    max_iter: int = 1000,
    convergence_iter: int = 50,
    min_frac: float = 0.05,
    snr_db: float = 17.0,
    snr_window_s: float = 0.024,
    workers: int = 1,
) -> tuple[list[ClusterCandidate], list[int]]:
    """Normalize, cluster and filter a batch of uniform beats.

    Returns the candidates plus the indices of beats excluded up front
    (constant beats that cannot be normalized).
    """
    normalized: list[np.ndarray] = []
    kept_idx: list[int] = []
    excluded: list[int] = []
    for k, b in enumerate(beats):
        try:
            norm, _, _ = minmax_normalize(b.values)
        except ValueError:
            excluded.append(k)
            continue
        normalized.append(norm)
        kept_idx.append(k)
    if len(kept_idx) < 2:
        raise ValueError("need at least two non-constant beats to cluster")
    kept_beats = [beats[k] for k in kept_idx]
    distances = pairwise_dtw(normalized, workers=workers)
    outcome = cluster_beats(
        distances,
        preference=preference,
        damping=damping,
        max_iter=max_iter,
        convergence_iter=convergence_iter,
    )
    candidates = filter_centroids(
        outcome,
        kept_beats,
        normalized,
        distances,
        min_frac=min_frac,
        snr_db=snr_db,
        snr_window_s=snr_window_s,
    )
    # candidates index into the filtered batch; map everything back to the
    # caller's beat numbering
    remapped = [
        ClusterCandidate(
            id=kept_idx[c.id],
            template=Template(
                id=kept_idx[c.template.id],
                values=c.template.values,
                fs=c.template.fs,
                source_beat=kept_idx[c.template.source_beat],
                cluster_mean_d=c.template.cluster_mean_d,
                cluster_std_d=c.template.cluster_std_d,
            ),
            centroid=c.centroid,
            member_dists=c.member_dists,
            template_dist=c.template_dist,
            size=c.size,
        )
        for c in candidates
    ]
    return remapped, excluded
