"""End-to-end run: acquire templates, sample events, reconstruct, evaluate.

One record pass per bit depth. The first stretch of the record stands in
for the uniform acquisition phase and feeds clustering; the rest is
level-crossing sampled and reconstructed beat by beat against the
template set, next to linear and sample-and-hold baselines. Matching
distances stream into the drift trigger; in progressive mode a confirmed
drift schedules a short uniform reacquisition whose beats are merged
into the set. Everything is simulation-time deterministic: identical
inputs and config give identical outputs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .baselines import linear_interp, sample_hold
from .clustering import build_candidates
from .metrics import BeatRow, EvalReport, aggregate, dtw_metric, match_waves, prd
from .reconstruction import reconstruct_beat
from .sampler import LevelGrid, UniformSignal, lc_sample, srf
from .segmentation import beat_windows, slice_events, slice_uniform
from .synth import SynthRecord
from .templates import (
    RECOMPUTE,
    TemplatesSet,
    TriggerState,
    initial_set,
    update_templates_set,
)
from .warping import rank_templates

__all__ = [
    "MODES",
    "PipelineConfig",
    "RecordBundle",
    "PipelineResult",
    "bundle_from_synth",
    "parse_config_text",
    "config_from",
    "run_pipeline",
    "detect_wave_marks",
    "percentile_beat_rows",
]

MODES = ("progressive", "initial_only", "single_template")

_TOL = 1e-9


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of a run; defaults follow the reference setup."""

    bits: tuple[int, ...] = (3, 4, 5)
    lam: float = 1.0
    initial_acquire_s: float = 180.0
    reacquire_s: float = 40.0
    reference_len: int = 400
    batch_period_s: float = 60.0
    alpha: float = 0.05
    damping: float = 0.9
    max_iter: int = 1000
    convergence_iter: int = 50
    min_cluster_frac: float = 0.05
    snr_db: float = 17.0
    median_ms: float = 24.0
    wave_window_s: float = 0.15
    min_batch: int = 5
    mode: str = "progressive"

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if not self.bits or any(b < 1 for b in self.bits):
            raise ValueError("bits must be a non-empty list of integers >= 1")
        for name in (
            "initial_acquire_s",
            "reacquire_s",
            "batch_period_s",
            "median_ms",
            "wave_window_s",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.reference_len < 1 or self.min_batch < 1:
            raise ValueError("reference_len and min_batch must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["bits"] = list(self.bits)
        return d


@dataclass(frozen=True)
class RecordBundle:
    """A record plus its annotations and optional wave-mark ground truth."""

    signal: UniformSignal
    qrs_times: np.ndarray
    p_times: Optional[np.ndarray] = None
    t_times: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        q = np.asarray(self.qrs_times, dtype=float)
        object.__setattr__(self, "qrs_times", q)
        t0 = self.signal.t0
        t1 = t0 + len(self.signal) / self.signal.fs
        if len(q) and (q[0] < t0 - _TOL or q[-1] > t1 + _TOL):
            raise ValueError("annotations fall outside the record span")


def bundle_from_synth(rec: SynthRecord) -> RecordBundle:
    return RecordBundle(
        signal=rec.signal,
        qrs_times=rec.qrs_times,
        p_times=rec.p_times,
        t_times=rec.t_times,
    )


# ---------------------------------------------------------------------------
# configuration sources
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """key=value per line; blank lines and # comments skipped."""
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {ln}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def _coerce(name: str, raw: str):
    if name == "bits":
        return tuple(int(p) for p in raw.split(",") if p.strip())
    if name == "mode":
        return raw
    ftype = _FIELD_TYPES.get(name)
    if ftype is None:
        raise ValueError(f"unknown config key: {name}")
    if ftype == "int":
        return int(raw)
    return float(raw)


def config_from(
    text: Optional[str] = None, overrides: Optional[dict] = None
) -> PipelineConfig:
    """Build a config from an optional file text plus explicit overrides.

    Overrides win over the file; both win over defaults. Override values
    may be already-typed or strings (flag parsing hands in strings).
    """
    merged: dict = {}
    if text is not None:
        for k, v in parse_config_text(text).items():
            merged[k] = _coerce(k, v)
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k not in _FIELD_TYPES:
            raise ValueError(f"unknown config key: {k}")
        merged[k] = _coerce(k, v) if isinstance(v, str) else v
    return PipelineConfig(**merged)


# ---------------------------------------------------------------------------
# wave-mark surrogate detector
# ---------------------------------------------------------------------------

def detect_wave_marks(
    values,
    fs: float,
    t_first: float,
    qrs_time: float,
    window: tuple[float, float],
    thr_frac: float = 0.08,
) -> dict[str, float]:
    """Threshold peak picking on a reconstructed beat.

    Searches an early stretch before the QRS for the low atrial bump and
    a late stretch after it for the broad repolarization bump. A peak
    counts only if it is an interior maximum rising at least
    ``thr_frac`` of the beat's own amplitude range above the floor of
    its search stretch; flattened reconstructions fail that test and
    yield no mark. Returns wave -> absolute peak time for the detected
    subset of {"p", "t"}.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        return {}
    span = window[1] - window[0]
    amp = float(np.max(v) - np.min(v))
    if amp <= 0.0:
        return {}
    out: dict[str, float] = {}
    stretches = {
        "p": (qrs_time - 0.30 * span, qrs_time - 0.08 * span),
        "t": (qrs_time + 0.08 * span, qrs_time + 0.45 * span),
    }
    for wave, (lo_t, hi_t) in stretches.items():
        lo = int(np.ceil((lo_t - t_first) * fs - _TOL))
        hi = int(np.floor((hi_t - t_first) * fs + _TOL)) + 1
        lo = max(lo, 0)
        hi = min(hi, len(v))
        if hi - lo < 3:
            continue
        seg = v[lo:hi]
        k = int(np.argmax(seg))
        if k == 0 or k == len(seg) - 1:
            continue
        if seg[k] - float(np.min(seg)) < thr_frac * amp:
            continue
        out[wave] = t_first + (lo + k) / fs
    return out


# ---------------------------------------------------------------------------
# the run itself
# ---------------------------------------------------------------------------

@dataclass
class PipelineResult:
    report: EvalReport
    reconstructions: dict[int, UniformSignal]
    final_templates: dict[int, TemplatesSet]
    trigger_log: list[dict]
    config: PipelineConfig
    beat_arrays: dict[tuple[str, int, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = field(
        default_factory=dict
    )


def _initial_templates(bundle, windows, qrs, config, acq_end) -> TemplatesSet:
    init_idx = [
        k
        for k, (s, e) in enumerate(windows)
        if s >= bundle.signal.t0 - _TOL and e <= acq_end + _TOL
    ]
    if len(init_idx) < 2:
        raise ValueError(
            "initial acquisition window holds fewer than two beats; "
            "increase initial_acquire_s"
        )
    beats = [slice_uniform(bundle.signal, windows[k], qrs[k]) for k in init_idx]
    candidates, _ = build_candidates(
        beats,
        damping=config.damping,
        max_iter=config.max_iter,
        convergence_iter=config.convergence_iter,
        min_frac=config.min_cluster_frac,
        snr_db=config.snr_db,
        snr_window_s=config.median_ms / 1000.0,
    )
    if config.mode == "single_template":
        best = max(candidates, key=lambda c: (c.size, -c.id))
        candidates = [best]
    return initial_set(candidates, now=acq_end)


def run_pipeline(bundle: RecordBundle, config: PipelineConfig) -> PipelineResult:
    """Execute the full acquisition/reconstruction/evaluation loop."""
    sig = bundle.signal
    fs = sig.fs
    qrs = np.asarray(bundle.qrs_times, dtype=float)
    windows = beat_windows(qrs)
    t_end = sig.t0 + len(sig) / fs
    acq_end = sig.t0 + config.initial_acquire_s
    if acq_end >= t_end - _TOL:
        raise ValueError("record ends inside the initial acquisition window")

    base_set = _initial_templates(bundle, windows, qrs, config, acq_end)

    eb_idx = [
        k for k, (s, e) in enumerate(windows) if s >= acq_end - _TOL and e <= t_end + _TOL
    ]
    if not eb_idx:
        raise ValueError("no beats left after the initial acquisition window")

    rows: list[BeatRow] = []
    skipped: list[dict] = []
    srf_by_bits: dict[int, float] = {}
    recons: dict[int, UniformSignal] = {}
    finals: dict[int, TemplatesSet] = {}
    trigger_log: list[dict] = []
    beat_arrays: dict[tuple[str, int, int], tuple] = {}
    wave_stats: dict[tuple[str, int, str], object] = {}

    v_min = float(np.min(sig.values))
    v_max = float(np.max(sig.values))
    eb_start = windows[eb_idx[0]][0]
    k0 = int(np.ceil((eb_start - sig.t0) * fs - _TOL))
    tail = UniformSignal(values=sig.values[k0:], fs=fs, t0=sig.t0 + k0 / fs)

    for bits in config.bits:
        grid = LevelGrid(bits=bits, v_min=v_min, v_max=v_max)
        events = lc_sample(tail, grid)
        srf_by_bits[bits] = srf(len(tail), len(events))

        tset = dataclasses.replace(base_set)
        trigger: Optional[TriggerState] = None
        if config.mode == "progressive":
            trigger = TriggerState(
                reference_len=config.reference_len,
                batch_period_s=config.batch_period_s,
                alpha=config.alpha,
                min_batch=config.min_batch,
            )
        reacq_end: Optional[float] = None
        reacq_beats: list = []

        out_grid_n = len(tail)
        out_values = np.zeros(out_grid_n)
        scored: dict[str, list[int]] = {"template": [], "linear": [], "hold": []}
        detections: dict[tuple[str, str], list[float]] = {}

        for k in eb_idx:
            s, e = windows[k]
            q = float(qrs[k])

            if reacq_end is not None and e > reacq_end + _TOL:
                tset, trigger_log_entry = _finish_reacquisition(
                    tset, reacq_beats, config, reacq_end, bits
                )
                trigger_log.append(trigger_log_entry)
                assert trigger is not None
                trigger.reset_for_new_set()
                trigger_log.append(
                    {
                        "bits": bits,
                        "t": reacq_end,
                        "event": "reset",
                        "generation": tset.generation,
                    }
                )
                reacq_end = None
                reacq_beats = []

            try:
                ub = slice_uniform(sig, (s, e), q)
            except ValueError as exc:
                skipped.append(
                    {"beat_id": k, "bits": bits, "method": "all", "reason": str(exc)}
                )
                continue
            try:
                eb = slice_events(events, (s, e), qrs_time=q, include_end=True)
                match = rank_templates(eb, tset.templates, lam=config.lam)
                tpl = next(t for t in tset.templates if t.id == match.template_id)
                d = match.distances[match.template_id]
                rec = reconstruct_beat(
                    eb, tpl, fs=fs, lam=config.lam, t_ref=sig.t0, warp=match.warp
                )
                recs = {
                    "template": rec.values,
                    "linear": linear_interp(eb, fs, t_ref=sig.t0).values,
                    "hold": sample_hold(eb, fs, t_ref=sig.t0).values,
                }
                if any(len(v) != len(ub.values) for v in recs.values()):
                    raise ValueError("reconstruction grid mismatch")
            except ValueError as exc:
                skipped.append(
                    {"beat_id": k, "bits": bits, "method": "all", "reason": str(exc)}
                )
            else:
                t_beat = ub.t_first + np.arange(len(ub.values)) / fs
                for method, vals in recs.items():
                    rows.append(
                        BeatRow(
                            beat_id=k,
                            method=method,
                            bits=bits,
                            prd=prd(ub.values, vals),
                            dtw_distance=dtw_metric(ub.values, vals),
                        )
                    )
                    scored[method].append(k)
                    beat_arrays[(method, bits, k)] = (t_beat, ub.values, vals)
                    marks = detect_wave_marks(
                        vals, fs, ub.t_first, q, (s, e)
                    )
                    for wave, mt in marks.items():
                        detections.setdefault((method, wave), []).append(mt)
                off = int(round((ub.t_first - tail.t0) * fs))
                out_values[off : off + len(recs["template"])] = recs["template"]

                if trigger is not None:
                    before = trigger.evaluations
                    signal = trigger.observe(d, now=e)
                    if trigger.evaluations > before:
                        trigger_log.append(
                            {
                                "bits": bits,
                                "t": e,
                                "event": "evaluation",
                                "p": trigger.last_p,
                                "failures": trigger.consecutive_failures,
                            }
                        )
                    if signal == RECOMPUTE:
                        trigger_log.append(
                            {"bits": bits, "t": e, "event": "recompute"}
                        )
                        reacq_end = e + config.reacquire_s
                        reacq_beats = []
                        continue  # the firing beat predates the new batch

            if reacq_end is not None and e <= reacq_end + _TOL:
                reacq_beats.append(ub)

        if reacq_end is not None:
            trigger_log.append(
                {
                    "bits": bits,
                    "t": t_end,
                    "event": "reacquisition_incomplete",
                    "collected": len(reacq_beats),
                }
            )

        recons[bits] = UniformSignal(values=out_values, fs=fs, t0=tail.t0)
        finals[bits] = tset

        if bundle.p_times is not None or bundle.t_times is not None:
            truth = {"p": bundle.p_times, "t": bundle.t_times}
            for method in ("template", "linear", "hold"):
                wins = [windows[k] for k in scored[method]]
                for wave in ("p", "t"):
                    marks = truth[wave]
                    if marks is None:
                        continue
                    ref = [
                        float(m)
                        for m in marks
                        if any(s - _TOL <= m < e - _TOL for s, e in wins)
                    ]
                    det = detections.get((method, wave), [])
                    wave_stats[(method, bits, wave)] = match_waves(
                        ref, det, window_s=config.wave_window_s
                    )

    report = EvalReport(
        per_beat=rows,
        aggregates=aggregate(rows),
        wave_stats=wave_stats,
        srf=srf_by_bits,
        skipped=skipped,
    )
    return PipelineResult(
        report=report,
        reconstructions=recons,
        final_templates=finals,
        trigger_log=trigger_log,
        config=config,
        beat_arrays=beat_arrays,
    )


def _finish_reacquisition(tset, reacq_beats, config, reacq_end, bits):
    """Cluster the reacquired uniform beats and merge them into the set."""
    entry = {"bits": bits, "t": reacq_end, "event": "merge"}
    if len(reacq_beats) < 2:
        entry["event"] = "merge_skipped"
        entry["reason"] = "fewer than two reacquired beats"
        return tset, entry
    try:
        candidates, _ = build_candidates(
            reacq_beats,
            damping=config.damping,
            max_iter=config.max_iter,
            convergence_iter=config.convergence_iter,
            min_frac=config.min_cluster_frac,
            snr_db=config.snr_db,
            snr_window_s=config.median_ms / 1000.0,
        )
    except ValueError as exc:
        entry["event"] = "merge_skipped"
        entry["reason"] = str(exc)
        return tset, entry
    new_set = update_templates_set(tset, candidates, now=reacq_end)
    entry["n_candidates"] = len(candidates)
    entry["n_templates"] = len(new_set.templates)
    return new_set, entry


def percentile_beat_rows(result: PipelineResult) -> list[dict]:
    """Plot-data rows: per (method, bits), the beats nearest each percentile."""
    out: list[dict] = []
    groups: dict[tuple[str, int], list[BeatRow]] = {}
    for r in result.report.per_beat:
        groups.setdefault((r.method, r.bits), []).append(r)
    for (method, bits) in sorted(groups):
        rs = sorted(groups[(method, bits)], key=lambda r: r.beat_id)
        dists = np.array([r.dtw_distance for r in rs])
        for pct in (5, 25, 50, 75, 95):
            target = np.percentile(dists, pct)
            beat = rs[int(np.argmin(np.abs(dists - target)))]
            t, orig, rec = result.beat_arrays[(method, bits, beat.beat_id)]
            out.append(
                {
                    "method": method,
                    "bits": bits,
                    "percentile": pct,
                    "beat_id": beat.beat_id,
                    "t": t,
                    "original": orig,
                    "reconstructed": rec,
                }
            )
    return out
