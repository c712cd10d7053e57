"""Template set lifecycle: acquisition timing, drift trigger, set merging.

The trigger watches the stream of beat-to-template matching distances.
After a set is (re)computed it banks a reference block of distances, then
scores timed batches against that reference with a two-sample
Anderson-Darling test; two consecutive rejections mean the incoming
morphology no longer matches the stored templates and a recomputation is
requested. The merge keeps every morphology exactly once: old templates
still representative survive, drifted ones are replaced, unseen ones are
inserted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .clustering import ClusterCandidate, Template, minmax_normalize
from .stats import ad_two_sample
from .warping import dtw

__all__ = [
    "RECOMPUTE",
    "TemplatesSet",
    "TriggerState",
    "observe_distance",
    "initial_set",
    "update_templates_set",
    "acquisition_plan",
]

RECOMPUTE = "RECOMPUTE"


@dataclass
class TemplatesSet:
    """The currently active templates plus bookkeeping."""

    templates: list[Template]
    created_at: float
    generation: int = 0

    def __post_init__(self) -> None:
        if not self.templates:
            raise ValueError("a templates set needs at least one template")
        ids = [t.id for t in self.templates]
        if len(set(ids)) != len(ids):
            raise ValueError("template ids must be unique")

    def ids(self) -> list[int]:
        return [t.id for t in self.templates]


@dataclass
class TriggerState:
    """Recomputation trigger driven by matching distances.

    Phases: ``collecting_reference`` banks the first ``reference_len``
    distances; ``monitoring`` accumulates batches of ``batch_period_s``
    worth of distances and tests each against the reference;
    ``reacquiring`` ignores input until :meth:`reset_for_new_set`.
    Batches smaller than ``min_batch`` roll into the next period since
    the test is unreliable below that size.
    """

    reference_len: int = 400
    batch_period_s: float = 60.0
    alpha: float = 0.05
    min_batch: int = 5
    phase: str = "collecting_reference"
    reference: list[float] = field(default_factory=list)
    batch: list[float] = field(default_factory=list)
    batch_start: Optional[float] = None
    consecutive_failures: int = 0
    evaluations: int = 0
    last_p: Optional[float] = None

    def observe(self, d: float, now: float) -> Optional[str]:
        """Feed one matching distance; returns RECOMPUTE when drift is confirmed."""
        if d < 0:
            raise ValueError("matching distance must be non-negative")
        if self.phase == "reacquiring":
            return None
        if self.phase == "collecting_reference":
            self.reference.append(float(d))
            if len(self.reference) >= self.reference_len:
                self.phase = "monitoring"
                self.batch = []
                self.batch_start = float(now)
            return None

        signal = None
        elapsed = now - self.batch_start
        if elapsed >= self.batch_period_s:
            if len(self.batch) >= self.min_batch:
                _, p = ad_two_sample(self.reference, self.batch)
                self.evaluations += 1
                self.last_p = p
                if p < self.alpha:
                    self.consecutive_failures += 1
                else:
                    self.consecutive_failures = 0
                self.batch = []
                if self.consecutive_failures >= 2:
                    self.phase = "reacquiring"
                    signal = RECOMPUTE
            # jump to the period containing `now`; short batches carry over
            periods = int(elapsed // self.batch_period_s)
            self.batch_start += periods * self.batch_period_s
        if self.phase != "reacquiring":
            self.batch.append(float(d))
        return signal

    def reset_for_new_set(self) -> None:
        """Start over after a set recomputation: bank a fresh reference."""
        self.phase = "collecting_reference"
        self.reference = []
        self.batch = []
        self.batch_start = None
        self.consecutive_failures = 0
        self.evaluations = 0
        self.last_p = None


def observe_distance(state: TriggerState, d: float, now: float) -> Optional[str]:
    """Functional alias for :meth:`TriggerState.observe`."""
    return state.observe(d, now)


def _dist_from_centroid(template: Template, candidate: ClusterCandidate) -> float:
    """Plain DTW between a template and a cluster centroid, both min-max scaled."""
    normalized, _, _ = minmax_normalize(template.values)
    return dtw(normalized, candidate.centroid).distance


def initial_set(
    candidates: Iterable[ClusterCandidate], now: float = 0.0
) -> TemplatesSet:
    """First templates set: every candidate goes in, ids renumbered from 0."""
    cands = list(candidates)
    if not cands:
        raise ValueError("cannot build a templates set from zero candidates")
    templates = [replace(c.template, id=k) for k, c in enumerate(cands)]
    return TemplatesSet(templates=templates, created_at=float(now), generation=0)


def update_templates_set(
    old: TemplatesSet,
    candidates: Iterable[ClusterCandidate],
    now: Optional[float] = None,
) -> TemplatesSet:
    """Merge freshly clustered candidates into the active set.

    Each old template finds its nearest new cluster. Within that
    cluster's spread (mean member distance plus one standard deviation)
    it becomes a representation candidate for the cluster; otherwise it
    is kept outright, being a morphology the new batch never showed. Each
    new cluster then keeps the nearest old candidate if that candidate
    sits at least as close to the centroid as the cluster's own template,
    else it contributes its own template; clusters no old template came
    near are inserted as new morphologies.

    With no candidates at all the old set is returned unchanged, with a
    warning.
    """
    cands = list(candidates)
    if not cands:
        warnings.warn("empty candidate batch; keeping the previous templates set")
        return old

    dist = {
        (t.id, c.id): _dist_from_centroid(t, c)
        for t in old.templates
        for c in cands
    }

    near_candidates: dict[int, list[Template]] = {}
    merged: list[tuple[Template, bool]] = []  # (template, comes_from_new_batch)
    for t in old.templates:
        near = min(cands, key=lambda c: dist[(t.id, c.id)])
        if dist[(t.id, near.id)] <= near.threshold:
            near_candidates.setdefault(near.id, []).append(t)
        else:
            merged.append((t, False))

    for c in cands:
        pool = near_candidates.get(c.id)
        if pool is not None:
            near_old = min(pool, key=lambda t: dist[(t.id, c.id)])
            if dist[(near_old.id, c.id)] <= c.template_dist:
                merged.append((near_old, False))
            else:
                merged.append((c.template, True))
        else:
            merged.append((c.template, True))

    next_id = max((t.id for t, is_new in merged if not is_new), default=-1) + 1
    templates: list[Template] = []
    for t, is_new in merged:
        if is_new:
            templates.append(replace(t, id=next_id))
            next_id += 1
        else:
            templates.append(t)

    created = float(now) if now is not None else old.created_at
    return TemplatesSet(
        templates=templates, created_at=created, generation=old.generation + 1
    )


def acquisition_plan(
    first_time: bool, initial_s: float = 180.0, reacquire_s: float = 40.0
) -> float:
    """Uniform-acquisition duration: long on startup, short on recomputation."""
    return float(initial_s) if first_time else float(reacquire_s)
