"""File formats: records, annotations, event streams, template stores, reports.

All floats are written with 9 significant digits so reruns are
byte-identical and diffs stay readable. Records come as CSV, either a
``# fs=<rate>`` header followed by one value per line, or two ``t,v``
columns with a uniform time axis.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .clustering import Template
from .metrics import EvalReport
from .sampler import EventSample, UniformSignal
from .templates import TemplatesSet

__all__ = [
    "fmt",
    "load_record",
    "save_record",
    "load_annotations",
    "save_annotations",
    "load_events",
    "save_events",
    "load_templates",
    "save_templates",
    "emit_report",
    "per_beat_csv",
    "percentile_beats_csv",
    "append_jsonl",
]

PathLike = Union[str, Path]


def fmt(x: float) -> str:
    """9-significant-digit float formatting used in every text format."""
    return f"{float(x):.9g}"


def _round9(obj):
    """Recursively round floats to the 9-significant-digit grid for JSON."""
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_round9(float(v)) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(fmt(float(obj)))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


# ---------------------------------------------------------------------------
# records and annotations
# ---------------------------------------------------------------------------

def load_record(path: PathLike) -> UniformSignal:
    """Read a record CSV in either accepted layout.

    ``# fs=<rate>`` header form: one value per line, t0 = 0. Two-column
    form: ``t,v`` rows; the time axis must be uniform (its median step
    sets fs) and supplies t0.
    """
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty record")
    first = lines[0].strip()
    if first.startswith("#"):
        if "fs=" not in first:
            raise ValueError(f"{path}: header comment must carry fs=<rate>")
        fs = float(first.split("fs=")[1].strip())
        values = np.array([float(s) for s in lines[1:] if s.strip()])
        return UniformSignal(values=values, fs=fs, t0=0.0)
    rows = [s.split(",") for s in lines if s.strip()]
    if any(len(r) != 2 for r in rows):
        raise ValueError(f"{path}: two-column records need exactly t,v per row")
    t = np.array([float(r[0]) for r in rows])
    v = np.array([float(r[1]) for r in rows])
    dt = np.diff(t)
    if len(dt) == 0:
        raise ValueError(f"{path}: need at least two samples to infer fs")
    step = float(np.median(dt))
    if step <= 0 or np.any(np.abs(dt - step) > 1e-6 * max(step, 1.0)):
        raise ValueError(f"{path}: time column is not uniformly spaced")
    return UniformSignal(values=v, fs=1.0 / step, t0=float(t[0]))


def save_record(
    path: PathLike, signal: UniformSignal, two_column: bool = False
) -> None:
    with open(path, "w") as f:
        if two_column:
            for t, v in zip(signal.times(), signal.values):
                f.write(f"{fmt(t)},{fmt(v)}\n")
        else:
            f.write(f"# fs={fmt(signal.fs)}\n")
            for v in signal.values:
                f.write(f"{fmt(v)}\n")


def load_annotations(path: PathLike) -> np.ndarray:
    """One timestamp (seconds) per line."""
    lines = Path(path).read_text().strip().splitlines()
    return np.array([float(s) for s in lines if s.strip()])


def save_annotations(path: PathLike, times) -> None:
    with open(path, "w") as f:
        for t in np.asarray(times, dtype=float):
            f.write(f"{fmt(t)}\n")


# ---------------------------------------------------------------------------
# event streams
# ---------------------------------------------------------------------------

def save_events(path: PathLike, events: Iterable[EventSample]) -> None:
    with open(path, "w") as f:
        f.write("t,v,synthetic\n")
        for e in events:
            f.write(f"{fmt(e.t)},{fmt(e.v)},{int(e.synthetic)}\n")


def load_events(path: PathLike) -> list[EventSample]:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != "t,v,synthetic":
        raise ValueError(f"{path}: expected a t,v,synthetic header")
    out = []
    for s in lines[1:]:
        if not s.strip():
            continue
        t, v, syn = s.split(",")
        out.append(EventSample(t=float(t), v=float(v), synthetic=bool(int(syn))))
    return out


# ---------------------------------------------------------------------------
# template store
# ---------------------------------------------------------------------------

def save_templates(path: PathLike, ts: TemplatesSet) -> None:
    doc = {
        "generation": ts.generation,
        "created_at": ts.created_at,
        "templates": [
            {
                "id": t.id,
                "fs": t.fs,
                "source_beat": t.source_beat,
                "cluster_mean_d": t.cluster_mean_d,
                "cluster_std_d": t.cluster_std_d,
                "values": list(t.values),
            }
            for t in ts.templates
        ],
    }
    Path(path).write_text(json.dumps(_round9(doc), indent=1) + "\n")


def load_templates(path: PathLike) -> TemplatesSet:
    doc = json.loads(Path(path).read_text())
    templates = [
        Template(
            id=int(d["id"]),
            values=np.array(d["values"], dtype=float),
            fs=float(d["fs"]),
            source_beat=int(d["source_beat"]),
            cluster_mean_d=float(d["cluster_mean_d"]),
            cluster_std_d=float(d["cluster_std_d"]),
        )
        for d in doc["templates"]
    ]
    return TemplatesSet(
        templates=templates,
        created_at=float(doc["created_at"]),
        generation=int(doc["generation"]),
    )


# ---------------------------------------------------------------------------
# evaluation outputs
# ---------------------------------------------------------------------------

def emit_report(path: PathLike, report: EvalReport, config: dict) -> None:
    """Full run summary as JSON: config, srf, aggregates, wave_stats, skipped."""
    aggregates: dict = {}
    for (method, bits), stats in report.aggregates.items():
        slot = aggregates.setdefault(method, {})
        slot[str(bits)] = {
            "n": stats["n"],
            "median_beat_id": stats["median_beat_id"],
            "prd": dataclasses.asdict(stats["prd"]),
            "dtw": dataclasses.asdict(stats["dtw"]),
        }
    wave_stats: dict = {}
    for (method, bits, wave), score in report.wave_stats.items():
        wave_stats.setdefault(method, {}).setdefault(str(bits), {})[wave] = (
            dataclasses.asdict(score)
        )
    doc = {
        "config": config,
        "srf": {str(b): v for b, v in sorted(report.srf.items())},
        "aggregates": aggregates,
        "wave_stats": wave_stats,
        "skipped": report.skipped,
    }
    Path(path).write_text(json.dumps(_round9(doc), indent=1, sort_keys=True) + "\n")


def per_beat_csv(path: PathLike, report: EvalReport) -> None:
    """One row per (beat, method, bits): the raw numbers behind the stats."""
    with open(path, "w") as f:
        f.write("beat_id,method,bits,prd,dtw\n")
        for r in report.per_beat:
            f.write(
                f"{r.beat_id},{r.method},{r.bits},{fmt(r.prd)},{fmt(r.dtw_distance)}\n"
            )


def percentile_beats_csv(path: PathLike, rows: Iterable[dict]) -> None:
    """Plot-ready sample rows for chosen percentile beats.

    Each input dict carries method, bits, percentile, beat_id, and the
    aligned arrays t, original, reconstructed; one output row per sample.
    """
    with open(path, "w") as f:
        f.write("method,bits,percentile,beat_id,t,original,reconstructed\n")
        for row in rows:
            for t, o, r in zip(row["t"], row["original"], row["reconstructed"]):
                f.write(
                    f"{row['method']},{row['bits']},{row['percentile']},"
                    f"{row['beat_id']},{fmt(t)},{fmt(o)},{fmt(r)}\n"
                )


def append_jsonl(path: PathLike, entry: dict) -> None:
    """Append one JSON object as a line (trigger event log)."""
    with open(path, "a") as f:
        f.write(json.dumps(_round9(entry), sort_keys=True) + "\n")
