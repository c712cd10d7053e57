"""Command-line front end.

Subcommands map onto the pipeline stages: ``sample`` turns a record into
an event stream, ``templates`` builds or updates a template store,
``reconstruct`` turns events plus templates back into a record, ``eval``
runs the full comparison and writes the report, ``pipeline`` runs the
same engine and writes every artifact into a directory. Config values
come from defaults, then an optional key=value file, then flags.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as bio
from .clustering import build_candidates
from .pipeline import (
    MODES,
    PipelineConfig,
    RecordBundle,
    config_from,
    percentile_beat_rows,
    run_pipeline,
)
from .sampler import LevelGrid, UniformSignal, lc_sample, srf
from .segmentation import beat_windows, slice_events, slice_uniform, window_grid
from .templates import initial_set, update_templates_set
from .warping import rank_templates
from .reconstruction import reconstruct_beat

_CONFIG_FLAGS = (
    "bits",
    "lam",
    "initial_acquire_s",
    "reacquire_s",
    "reference_len",
    "batch_period_s",
    "alpha",
    "damping",
    "max_iter",
    "convergence_iter",
    "min_cluster_frac",
    "snr_db",
    "median_ms",
    "wave_window_s",
    "min_batch",
    "mode",
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("config overrides")
    for name in _CONFIG_FLAGS:
        flag = "--" + name.replace("_", "-")
        if name == "mode":
            g.add_argument(flag, dest=name, choices=MODES, default=None)
        else:
            g.add_argument(flag, dest=name, default=None, metavar="V")
    g.add_argument(
        "--config", dest="config_file", default=None, metavar="FILE",
        help="key=value config file; flags override it",
    )


def _config(args: argparse.Namespace) -> PipelineConfig:
    text = Path(args.config_file).read_text() if args.config_file else None
    overrides = {k: getattr(args, k) for k in _CONFIG_FLAGS if getattr(args, k) is not None}
    return config_from(text, overrides)


def _load_bundle(args: argparse.Namespace) -> RecordBundle:
    signal = bio.load_record(args.record)
    qrs = bio.load_annotations(args.annotations)
    p_marks = bio.load_annotations(args.p_marks) if args.p_marks else None
    t_marks = bio.load_annotations(args.t_marks) if args.t_marks else None
    return RecordBundle(signal=signal, qrs_times=qrs, p_times=p_marks, t_times=t_marks)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_sample(args) -> int:
    signal = bio.load_record(args.record)
    v_min = args.v_min if args.v_min is not None else float(np.min(signal.values))
    v_max = args.v_max if args.v_max is not None else float(np.max(signal.values))
    grid = LevelGrid(bits=args.bits, v_min=v_min, v_max=v_max)
    events = lc_sample(signal, grid)
    bio.save_events(args.out, events)
    print(
        f"events={len(events)} uniform={len(signal)} "
        f"srf={bio.fmt(srf(len(signal), len(events)))}"
    )
    return 0


def _cmd_templates(args) -> int:
    config = _config(args)
    signal = bio.load_record(args.record)
    qrs = bio.load_annotations(args.annotations)
    windows = beat_windows(qrs)
    t_limit = signal.t0 + args.duration if args.duration else None
    beats = []
    for k, (s, e) in enumerate(windows):
        if s < signal.t0 or (t_limit is not None and e > t_limit):
            continue
        if e > signal.t0 + len(signal) / signal.fs:
            continue
        beats.append(slice_uniform(signal, (s, e), qrs[k]))
    if len(beats) < 2:
        print("error: fewer than two usable beats in the acquisition span",
              file=sys.stderr)
        return 2
    candidates, excluded = build_candidates(
        beats,
        damping=config.damping,
        max_iter=config.max_iter,
        convergence_iter=config.convergence_iter,
        min_frac=config.min_cluster_frac,
        snr_db=config.snr_db,
        snr_window_s=config.median_ms / 1000.0,
    )
    if config.mode == "single_template":
        candidates = [max(candidates, key=lambda c: (c.size, -c.id))]
    now = t_limit if t_limit is not None else signal.t0 + len(signal) / signal.fs
    if args.update:
        old = bio.load_templates(args.update)
        ts = update_templates_set(old, candidates, now=now)
    else:
        ts = initial_set(candidates, now=now)
    bio.save_templates(args.out, ts)
    print(
        f"templates={len(ts.templates)} generation={ts.generation} "
        f"beats={len(beats)} excluded={len(excluded)}"
    )
    return 0


def _cmd_reconstruct(args) -> int:
    events = bio.load_events(args.events)
    ts = bio.load_templates(args.templates)
    qrs = bio.load_annotations(args.annotations)
    fs = args.fs if args.fs is not None else ts.templates[0].fs
    windows = beat_windows(qrs)
    t_ref = args.t_ref
    grid = window_grid((windows[0][0], windows[-1][1]), fs, t_ref)
    out = np.zeros(len(grid))
    skipped = 0
    for k, (s, e) in enumerate(windows):
        try:
            eb = slice_events(events, (s, e), qrs_time=qrs[k], include_end=True)
            match = rank_templates(eb, ts.templates, lam=args.lam)
            tpl = next(t for t in ts.templates if t.id == match.template_id)
            rec = reconstruct_beat(eb, tpl, fs=fs, lam=args.lam, t_ref=t_ref,
                                   warp=match.warp)
        except ValueError:
            skipped += 1
            continue
        off = int(round((rec.t_first - grid[0]) * fs))
        out[off : off + len(rec.values)] = rec.values
    sig = UniformSignal(values=out, fs=fs, t0=float(grid[0]))
    bio.save_record(args.out, sig, two_column=True)
    print(f"beats={len(windows)} skipped={skipped} samples={len(out)}")
    return 0


def _run_and_report(args, out_dir: Path | None) -> int:
    config = _config(args)
    bundle = _load_bundle(args)
    result = run_pipeline(bundle, config)
    rep = result.report

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / "report.json"
        per_beat = out_dir / "per_beat.csv"
        pct = out_dir / "percentile_beats.csv"
        trig = out_dir / "trigger.jsonl"
    else:
        report_path = Path(args.report)
        per_beat = Path(args.per_beat) if args.per_beat else None
        pct = Path(args.percentile_beats) if args.percentile_beats else None
        trig = Path(args.trigger_log) if args.trigger_log else None

    bio.emit_report(report_path, rep, config.to_dict())
    if per_beat is not None:
        bio.per_beat_csv(per_beat, rep)
    if pct is not None:
        bio.percentile_beats_csv(pct, percentile_beat_rows(result))
    if trig is not None:
        trig.write_text("")
        for entry in result.trigger_log:
            bio.append_jsonl(trig, entry)
    if out_dir is not None:
        for bits, sig in result.reconstructions.items():
            bio.save_record(out_dir / f"reconstructed_{bits}bit.csv", sig,
                            two_column=True)
        for bits, ts in result.final_templates.items():
            bio.save_templates(out_dir / f"templates_{bits}bit.json", ts)

    for (method, bits), stats in sorted(rep.aggregates.items()):
        print(
            f"{method}@{bits}bit: dtw_mean={bio.fmt(stats['dtw'].mean)} "
            f"prd_mean={bio.fmt(stats['prd'].mean)} n={stats['n']}"
        )
    for bits, value in sorted(rep.srf.items()):
        print(f"srf@{bits}bit={bio.fmt(value)}")
    if rep.skipped:
        print(f"skipped={len(rep.skipped)}")
    return 0


def _cmd_eval(args) -> int:
    return _run_and_report(args, out_dir=None)


def _cmd_pipeline(args) -> int:
    return _run_and_report(args, out_dir=Path(args.out_dir))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="beatwarp",
        description="Event-based heartbeat acquisition and template reconstruction",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("sample", help="level-crossing sample a record")
    ps.add_argument("--record", required=True)
    ps.add_argument("--bits", type=int, required=True)
    ps.add_argument("--out", required=True)
    ps.add_argument("--v-min", dest="v_min", type=float, default=None)
    ps.add_argument("--v-max", dest="v_max", type=float, default=None)
    ps.set_defaults(func=_cmd_sample)

    pt = sub.add_parser("templates", help="build or update a template store")
    pt.add_argument("--record", required=True)
    pt.add_argument("--annotations", required=True)
    pt.add_argument("--out", required=True)
    pt.add_argument("--duration", type=float, default=None,
                    help="seconds of record to use (default: all)")
    pt.add_argument("--update", default=None,
                    help="existing store to merge the new clusters into")
    _add_config_flags(pt)
    pt.set_defaults(func=_cmd_templates)

    pr = sub.add_parser("reconstruct", help="reconstruct beats from events")
    pr.add_argument("--events", required=True)
    pr.add_argument("--templates", required=True)
    pr.add_argument("--annotations", required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--fs", type=float, default=None)
    pr.add_argument("--lam", type=float, default=1.0)
    pr.add_argument("--t-ref", dest="t_ref", type=float, default=0.0)
    pr.set_defaults(func=_cmd_reconstruct)

    def _eval_common(pp):
        pp.add_argument("--record", required=True)
        pp.add_argument("--annotations", required=True)
        pp.add_argument("--p-marks", dest="p_marks", default=None)
        pp.add_argument("--t-marks", dest="t_marks", default=None)
        _add_config_flags(pp)

    pe = sub.add_parser("eval", help="run the comparison and write a report")
    _eval_common(pe)
    pe.add_argument("--report", required=True)
    pe.add_argument("--per-beat", dest="per_beat", default=None)
    pe.add_argument("--percentile-beats", dest="percentile_beats", default=None)
    pe.add_argument("--trigger-log", dest="trigger_log", default=None)
    pe.set_defaults(func=_cmd_eval)

    pp = sub.add_parser("pipeline", help="end-to-end run, all artifacts")
    _eval_common(pp)
    pp.add_argument("--out-dir", dest="out_dir", required=True)
    pp.set_defaults(func=_cmd_pipeline)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
