"""Event-based heartbeat acquisition and template-warping reconstruction.

A numpy/scipy toolkit that simulates level-crossing sampling of ECG-like
records, manages a clustered set of heartbeat templates, reconstructs
beat morphology by warping templates through sparse events, and evaluates
the result against classical resampling baselines.
"""

from .baselines import linear_interp, quad_spline, sample_hold
from .clustering import (
    ClusterCandidate,
    ClusterOutcome,
    Template,
    affinity_propagation,
    build_candidates,
    cluster_beats,
    filter_centroids,
    minmax_invert,
    minmax_normalize,
    pairwise_dtw,
    snr_estimate,
)
from .metrics import (
    BeatRow,
    EvalReport,
    MetricStats,
    WaveScore,
    aggregate,
    dtw_metric,
    match_waves,
    prd,
)
from .pipeline import (
    MODES,
    PipelineConfig,
    PipelineResult,
    RecordBundle,
    bundle_from_synth,
    config_from,
    detect_wave_marks,
    percentile_beat_rows,
    run_pipeline,
)
from .reconstruction import (
    ReconstructedBeat,
    recompose,
    reconstruct_beat,
    segment_assign,
    shift_segment,
    warp_segment,
)
from .sampler import EventSample, LevelGrid, UniformSignal, lc_sample, srf
from .segmentation import (
    EventBeat,
    UniformBeat,
    beat_windows,
    segment_events,
    segment_uniform,
    slice_events,
    slice_uniform,
    window_grid,
)
from .stats import ad_two_sample
from .synth import ALT_SHAPE, DEFAULT_SHAPE, BeatShape, SynthRecord, make_record
from .templates import (
    RECOMPUTE,
    TemplatesSet,
    TriggerState,
    acquisition_plan,
    initial_set,
    observe_distance,
    update_templates_set,
)
from .warping import (
    MatchOutcome,
    SeriesView,
    WarpResult,
    derivative,
    dtw,
    event_series,
    ii_ddtw,
    rank_templates,
    template_series,
)

__all__ = [
    "EventSample",
    "LevelGrid",
    "UniformSignal",
    "lc_sample",
    "srf",
    "EventBeat",
    "UniformBeat",
    "beat_windows",
    "segment_events",
    "segment_uniform",
    "slice_events",
    "slice_uniform",
    "window_grid",
    "MatchOutcome",
    "SeriesView",
    "WarpResult",
    "derivative",
    "dtw",
    "event_series",
    "ii_ddtw",
    "rank_templates",
    "template_series",
    "ad_two_sample",
    "linear_interp",
    "quad_spline",
    "sample_hold",
    "prd",
    "dtw_metric",
    "match_waves",
    "aggregate",
    "WaveScore",
    "BeatRow",
    "MetricStats",
    "EvalReport",
    "minmax_normalize",
    "minmax_invert",
    "pairwise_dtw",
    "affinity_propagation",
    "cluster_beats",
    "snr_estimate",
    "filter_centroids",
    "build_candidates",
    "ClusterOutcome",
    "ClusterCandidate",
    "Template",
    "segment_assign",
    "shift_segment",
    "warp_segment",
    "recompose",
    "reconstruct_beat",
    "ReconstructedBeat",
    "RECOMPUTE",
    "TemplatesSet",
    "TriggerState",
    "observe_distance",
    "initial_set",
    "update_templates_set",
    "acquisition_plan",
    "BeatShape",
    "DEFAULT_SHAPE",
    "ALT_SHAPE",
    "SynthRecord",
    "make_record",
    "MODES",
    "PipelineConfig",
    "RecordBundle",
    "PipelineResult",
    "bundle_from_synth",
    "config_from",
    "run_pipeline",
    "detect_wave_marks",
    "percentile_beat_rows",
]

__version__ = "0.1.0"
