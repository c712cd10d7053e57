"""End-to-end run orchestration."""

import numpy as np
import pytest

from beatwarp.io import per_beat_csv
from beatwarp.pipeline import (
    PipelineConfig,
    RecordBundle,
    bundle_from_synth,
    config_from,
    detect_wave_marks,
    parse_config_text,
    percentile_beat_rows,
    run_pipeline,
)
from beatwarp.sampler import UniformSignal
from beatwarp.synth import ALT_SHAPE, beat_values, make_record


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_config_defaults():
    c = PipelineConfig()
    assert c.bits == (3, 4, 5)
    assert c.lam == 1.0
    assert c.initial_acquire_s == 180.0
    assert c.reacquire_s == 40.0
    assert c.reference_len == 400
    assert c.batch_period_s == 60.0
    assert c.alpha == 0.05
    assert c.min_cluster_frac == 0.05
    assert c.snr_db == 17.0
    assert c.median_ms == 24.0
    assert c.wave_window_s == 0.15
    assert c.mode == "progressive"


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(mode="other")
    with pytest.raises(ValueError):
        PipelineConfig(alpha=1.5)
    with pytest.raises(ValueError):
        PipelineConfig(bits=())
    with pytest.raises(ValueError):
        PipelineConfig(bits=(0,))
    with pytest.raises(ValueError):
        PipelineConfig(batch_period_s=-1.0)
    with pytest.raises(ValueError):
        PipelineConfig(lam=-0.5)


def test_parse_config_text():
    text = "bits = 3,4\nlam=0.5  # comment\n\n# full line comment\nmode=initial_only\n"
    assert parse_config_text(text) == {
        "bits": "3,4",
        "lam": "0.5",
        "mode": "initial_only",
    }
    with pytest.raises(ValueError, match="key=value"):
        parse_config_text("lam 0.5\n")


def test_config_from_precedence():
    c = config_from("bits=3\nlam=0.5\n", {"lam": "2.0", "reference_len": 30})
    assert c.bits == (3,)
    assert c.lam == 2.0
    assert c.reference_len == 30
    with pytest.raises(ValueError, match="unknown"):
        config_from("lambda=1\n")
    with pytest.raises(ValueError, match="unknown"):
        config_from(None, {"nope": 1})


# ---------------------------------------------------------------------------
# wave-mark detector
# ---------------------------------------------------------------------------

def _beat_on_grid(shape_fn, fs=128.0):
    t = np.arange(int(fs)) / fs
    return shape_fn(t), t


def test_detector_finds_both_waves():
    fs = 128.0
    vals, _ = _beat_on_grid(lambda t: beat_values(t), fs)
    marks = detect_wave_marks(vals, fs, 0.0, 0.4, (0.0, 1.0))
    assert set(marks) == {"p", "t"}
    assert marks["p"] == pytest.approx(0.25, abs=1.5 / fs)
    assert marks["t"] == pytest.approx(0.62, abs=1.5 / fs)


def test_detector_misses_flattened_wave():
    fs = 128.0
    vals, t = _beat_on_grid(lambda t: beat_values(t), fs)
    # wipe the early bump the way a sparse linear reconstruction does
    flat = vals.copy()
    zone = (t > 0.12) & (t < 0.35)
    flat[zone] = np.interp(t[zone], [0.12, 0.35], [vals[t <= 0.12][-1], vals[t >= 0.35][0]])
    marks = detect_wave_marks(flat, fs, 0.0, 0.4, (0.0, 1.0))
    assert "p" not in marks
    assert "t" in marks


def test_detector_degenerate_inputs():
    assert detect_wave_marks(np.zeros(64), 128.0, 0.0, 0.4, (0.0, 0.5)) == {}
    assert detect_wave_marks(np.array([1.0, 2.0]), 128.0, 0.0, 0.4, (0.0, 1.0)) == {}
    # monotone ramp has no interior maximum in either stretch
    ramp = np.linspace(0.0, 1.0, 128)
    assert detect_wave_marks(ramp, 128.0, 0.0, 0.4, (0.0, 1.0)) == {}


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def plain_run():
    rec = make_record(60, fs=128.0, seed=5)
    cfg = PipelineConfig(bits=(4,), initial_acquire_s=20.0)
    return rec, cfg, run_pipeline(bundle_from_synth(rec), cfg)


def test_row_coverage(plain_run):
    rec, cfg, res = plain_run
    rep = res.report
    assert not rep.skipped
    per_method = {}
    for r in rep.per_beat:
        per_method.setdefault(r.method, []).append(r.beat_id)
    assert set(per_method) == {"template", "linear", "hold"}
    ids = sorted(per_method["template"])
    for m in ("linear", "hold"):
        assert sorted(per_method[m]) == ids
    assert len(ids) == len(set(ids))
    assert set(rep.srf) == {4}
    assert 0.0 < rep.srf[4] < 1.0


def test_reconstruction_ordering(plain_run):
    _, _, res = plain_run
    agg = res.report.aggregates
    assert (
        agg[("template", 4)]["dtw"].mean
        < agg[("linear", 4)]["dtw"].mean
        < agg[("hold", 4)]["dtw"].mean
    )


def test_wave_stats_direction(plain_run):
    _, _, res = plain_run
    ws = res.report.wave_stats
    assert ws[("template", 4, "p")].f1 >= ws[("linear", 4, "p")].f1
    assert ws[("template", 4, "t")].f1 >= ws[("linear", 4, "t")].f1
    assert ws[("template", 4, "p")].f1 > 0.9


def test_reconstructed_record_alignment(plain_run):
    rec, cfg, res = plain_run
    out = res.reconstructions[4]
    sig = rec.signal
    # reconstruction lives on the record lattice, past the acquisition span
    assert out.fs == sig.fs
    k = round((out.t0 - sig.t0) * sig.fs)
    assert out.t0 == pytest.approx(sig.t0 + k / sig.fs)
    assert len(out.values) == len(sig.values) - k
    assert np.any(out.values != 0.0)


def test_percentile_rows(plain_run):
    _, _, res = plain_run
    rows = percentile_beat_rows(res)
    assert len(rows) == 3 * 5  # three methods, five percentiles, one bit depth
    for r in rows:
        assert r["percentile"] in (5, 25, 50, 75, 95)
        assert len(r["t"]) == len(r["original"]) == len(r["reconstructed"])


def test_determinism(plain_run, tmp_path):
    rec, cfg, res = plain_run
    res2 = run_pipeline(bundle_from_synth(rec), cfg)
    assert res.report.per_beat == res2.report.per_beat
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    per_beat_csv(a, res.report)
    per_beat_csv(b, res2.report)
    assert a.read_bytes() == b.read_bytes()


def test_trigger_fires_on_morphology_switch():
    rec = make_record(240, fs=128.0, seed=12, alt_shape=ALT_SHAPE, switch_at=140)
    cfg = PipelineConfig(
        bits=(4,),
        initial_acquire_s=30.0,
        reference_len=40,
        batch_period_s=20.0,
        reacquire_s=20.0,
    )
    res = run_pipeline(bundle_from_synth(rec), cfg)
    log = res.trigger_log
    recomputes = [e for e in log if e["event"] == "recompute"]
    assert len(recomputes) == 1
    assert recomputes[0]["t"] > 140.0  # only after the switch
    evals = [e for e in log if e["event"] == "evaluation"]
    failures = [e["failures"] for e in evals]
    # the two consecutive failing batches immediately precede the signal
    k = next(i for i, e in enumerate(log) if e["event"] == "recompute")
    pre = [e for e in log[:k] if e["event"] == "evaluation"]
    assert [e["failures"] for e in pre[-2:]] == [1, 2]
    assert all(f == 0 for f in failures[:-2])
    merges = [e for e in log if e["event"] == "merge"]
    resets = [e for e in log if e["event"] == "reset"]
    assert len(merges) == 1 and len(resets) == 1
    assert res.final_templates[4].generation == 1
    # the merged set now carries the second morphology (lower peak)
    peaks = [float(np.max(t.values)) for t in res.final_templates[4].templates]
    assert min(peaks) < 0.75 < max(peaks)


def test_single_failing_batch_never_fires():
    # morphology flips late enough that only one failing batch completes
    # before the record runs out
    rec = make_record(150, fs=128.0, seed=12, alt_shape=ALT_SHAPE, switch_at=105)
    cfg = PipelineConfig(
        bits=(4,),
        initial_acquire_s=30.0,
        reference_len=40,
        batch_period_s=20.0,
    )
    res = run_pipeline(bundle_from_synth(rec), cfg)
    evals = [e for e in res.trigger_log if e["event"] == "evaluation"]
    assert [e["failures"] for e in evals] == [0, 0, 1]
    assert evals[-1]["p"] < cfg.alpha
    assert not [e for e in res.trigger_log if e["event"] == "recompute"]
    assert res.final_templates[4].generation == 0


def test_inert_modes():
    rec = make_record(90, fs=128.0, seed=12, alt_shape=ALT_SHAPE, switch_at=60)
    for mode in ("initial_only", "single_template"):
        cfg = PipelineConfig(
            bits=(4,),
            initial_acquire_s=20.0,
            reference_len=10,
            batch_period_s=10.0,
            mode=mode,
        )
        res = run_pipeline(bundle_from_synth(rec), cfg)
        assert [e for e in res.trigger_log if e["event"] == "evaluation"] == []
        assert res.final_templates[4].generation == 0
        if mode == "single_template":
            assert len(res.final_templates[4].templates) == 1
        assert len(res.report.per_beat) > 0


def test_skipped_beats_are_accounted():
    rec = make_record(40, fs=128.0, seed=5)
    # a double detection: two annotations 5 ms apart produce a window too
    # short to hold a single sample (beat 29 was picked so the window falls
    # between grid points)
    qrs = np.sort(np.append(rec.qrs_times, rec.qrs_times[29] + 0.005))
    bundle = RecordBundle(signal=rec.signal, qrs_times=qrs)
    cfg = PipelineConfig(bits=(4,), initial_acquire_s=20.0)
    res = run_pipeline(bundle, cfg)
    assert len(res.report.skipped) >= 1
    reasons = {e["reason"] for e in res.report.skipped}
    assert any("window" in r or "record" in r for r in reasons)
    scored = {r.beat_id for r in res.report.per_beat}
    skipped = {e["beat_id"] for e in res.report.skipped}
    assert scored.isdisjoint(skipped)
    # every event-phase beat lands in exactly one of the two sets
    n_eb = len(scored) + len(skipped)
    rows_per_method = len(res.report.per_beat) // 3
    assert rows_per_method == len(scored)
    assert n_eb >= len(qrs) - 22  # acquisition beats plus two boundary drops


def test_bundle_validation():
    rec = make_record(10, fs=128.0, seed=0)
    with pytest.raises(ValueError, match="span"):
        RecordBundle(signal=rec.signal, qrs_times=np.array([0.5, 20.0]))
    b = bundle_from_synth(rec)
    assert b.p_times is not None and len(b.p_times) == 10


def test_run_errors():
    rec = make_record(10, fs=128.0, seed=0)
    bundle = bundle_from_synth(rec)
    with pytest.raises(ValueError, match="acquisition"):
        run_pipeline(bundle, PipelineConfig(bits=(4,), initial_acquire_s=60.0))
    with pytest.raises(ValueError, match="fewer than two beats"):
        run_pipeline(bundle, PipelineConfig(bits=(4,), initial_acquire_s=1.0))
