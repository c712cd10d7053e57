"""File format round-trips and deterministic serialization."""

import json

import numpy as np
import pytest

from beatwarp.clustering import Template
from beatwarp.io import (
    append_jsonl,
    emit_report,
    fmt,
    load_annotations,
    load_events,
    load_record,
    load_templates,
    per_beat_csv,
    percentile_beats_csv,
    save_annotations,
    save_events,
    save_record,
    save_templates,
)
from beatwarp.metrics import BeatRow, EvalReport, aggregate, match_waves
from beatwarp.sampler import EventSample, UniformSignal
from beatwarp.templates import TemplatesSet


def test_fmt_nine_significant_digits():
    assert fmt(1.0 / 3.0) == "0.333333333"
    assert fmt(0.1) == "0.1"
    assert fmt(123456789012.0) == "1.23456789e+11"
    assert fmt(-2.5) == "-2.5"


def test_record_header_roundtrip(tmp_path):
    sig = UniformSignal(values=np.array([0.0, 1.0 / 3.0, -2.5]), fs=128.0)
    p = tmp_path / "rec.csv"
    save_record(p, sig)
    text = p.read_text()
    assert text.startswith("# fs=128\n")
    back = load_record(p)
    assert back.fs == 128.0
    assert back.t0 == 0.0
    assert np.allclose(back.values, sig.values, rtol=1e-8)


def test_record_two_column_roundtrip(tmp_path):
    sig = UniformSignal(values=np.array([1.0, 2.0, 3.0, 2.0]), fs=250.0, t0=4.5)
    p = tmp_path / "rec2.csv"
    save_record(p, sig, two_column=True)
    back = load_record(p)
    assert back.fs == pytest.approx(250.0, rel=1e-6)
    assert back.t0 == pytest.approx(4.5)
    assert np.allclose(back.values, sig.values)


def test_record_format_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0.0,1.0\n0.5,2.0\n0.6,3.0\n")
    with pytest.raises(ValueError, match="uniform"):
        load_record(p)
    p.write_text("# rate 128\n1.0\n")
    with pytest.raises(ValueError, match="fs="):
        load_record(p)
    p.write_text("")
    with pytest.raises(ValueError, match="empty"):
        load_record(p)
    p.write_text("1.0,2.0,3.0\n")
    with pytest.raises(ValueError, match="t,v"):
        load_record(p)


def test_annotations_roundtrip(tmp_path):
    p = tmp_path / "qrs.csv"
    save_annotations(p, [0.4, 1.38, 2.41])
    assert np.allclose(load_annotations(p), [0.4, 1.38, 2.41])


def test_events_roundtrip(tmp_path):
    events = [
        EventSample(t=0.0, v=0.0, synthetic=True),
        EventSample(t=0.125, v=0.5),
        EventSample(t=0.5, v=-0.25),
        EventSample(t=1.0, v=0.0, synthetic=True),
    ]
    p = tmp_path / "ev.csv"
    save_events(p, events)
    back = load_events(p)
    assert back == events
    p.write_text("time,value\n0,1,0\n")
    with pytest.raises(ValueError, match="header"):
        load_events(p)


def test_templates_roundtrip(tmp_path):
    ts = TemplatesSet(
        templates=[
            Template(id=0, values=np.array([0.0, 1.0, 0.5]), fs=128.0,
                     source_beat=7, cluster_mean_d=0.21, cluster_std_d=0.05),
            Template(id=3, values=np.array([1.0, -1.0]), fs=128.0,
                     source_beat=2, cluster_mean_d=0.4, cluster_std_d=0.1),
        ],
        created_at=12.5,
        generation=2,
    )
    p = tmp_path / "templates.json"
    save_templates(p, ts)
    back = load_templates(p)
    assert back.generation == 2
    assert back.created_at == 12.5
    assert [t.id for t in back.templates] == [0, 3]
    for got, want in zip(back.templates, ts.templates):
        assert np.allclose(got.values, want.values, rtol=1e-8)
        assert got.fs == want.fs
        assert got.source_beat == want.source_beat
        assert got.cluster_mean_d == pytest.approx(want.cluster_mean_d)


def _report():
    rows = [
        BeatRow(beat_id=0, method="template", bits=4, prd=1.0 / 3.0,
                dtw_distance=1.5),
        BeatRow(beat_id=1, method="template", bits=4, prd=0.25,
                dtw_distance=2.0),
        BeatRow(beat_id=0, method="linear", bits=4, prd=0.5, dtw_distance=2.5),
        BeatRow(beat_id=1, method="linear", bits=4, prd=0.75, dtw_distance=3.0),
    ]
    return EvalReport(
        per_beat=rows,
        aggregates=aggregate(rows),
        wave_stats={
            ("template", 4, "p"): match_waves([1.0, 2.0], [1.05, 2.1]),
        },
        srf={4: 0.625},
        skipped=[{"beat_id": 9, "reason": "no events"}],
    )


def test_emit_report_structure(tmp_path):
    p = tmp_path / "report.json"
    emit_report(p, _report(), config={"bits": [4], "lam": 1.0})
    doc = json.loads(p.read_text())
    assert set(doc) == {"config", "srf", "aggregates", "wave_stats", "skipped"}
    assert doc["srf"] == {"4": 0.625}
    assert doc["aggregates"]["template"]["4"]["n"] == 2
    assert doc["aggregates"]["template"]["4"]["prd"]["mean"] == pytest.approx(
        (1.0 / 3.0 + 0.25) / 2, rel=1e-8
    )
    assert doc["wave_stats"]["template"]["4"]["p"]["f1"] == 1.0
    assert doc["skipped"][0]["reason"] == "no events"
    # floats land on the 9-digit grid
    assert doc["aggregates"]["template"]["4"]["prd"]["p5"] == float(
        fmt(doc["aggregates"]["template"]["4"]["prd"]["p5"])
    )


def test_per_beat_csv_golden_and_stable(tmp_path):
    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    rep = _report()
    per_beat_csv(p1, rep)
    per_beat_csv(p2, rep)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == "beat_id,method,bits,prd,dtw"
    assert lines[1] == "0,template,4,0.333333333,1.5"
    assert len(lines) == 5


def test_percentile_beats_csv(tmp_path):
    p = tmp_path / "pct.csv"
    percentile_beats_csv(
        p,
        [
            {
                "method": "template",
                "bits": 4,
                "percentile": 50,
                "beat_id": 3,
                "t": [0.0, 0.125],
                "original": [0.1, 0.2],
                "reconstructed": [0.1, 0.25],
            }
        ],
    )
    lines = p.read_text().splitlines()
    assert lines[0] == "method,bits,percentile,beat_id,t,original,reconstructed"
    assert lines[1] == "template,4,50,3,0,0.1,0.1"
    assert lines[2] == "template,4,50,3,0.125,0.2,0.25"


def test_append_jsonl(tmp_path):
    p = tmp_path / "trigger.jsonl"
    append_jsonl(p, {"t": 60.0, "event": "evaluation", "p": 0.25})
    append_jsonl(p, {"t": 120.0, "event": "recompute", "p": 0.001})
    lines = p.read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[1])["event"] == "recompute"
