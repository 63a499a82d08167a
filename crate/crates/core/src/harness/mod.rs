//! Benchmark presets, error metrics, the POD baseline and artifact output.

mod config;
mod manifest;
mod metrics;
mod pipeline;
mod plot;
mod pod;
mod preset;

pub use config::{
    ExecutionSection, GreedySection, ProblemSection, QuadratureSection, RunConfig, RunSection,
};
pub use manifest::{sha256_hex, Manifest, MANIFEST_NAME};
pub use metrics::{
    compression_ratio, error_metrics, ErrorAccumulator, LevelError, LevelFields, RunMetrics,
};
pub use pipeline::{
    evaluate, online_predictions, run_pipeline, Evaluation, PipelineOptions, PipelineResult,
    PodTiming, BENCH_METRICS_HEADER,
};
pub use plot::{
    error_series_csv, heatmap_csv, heatmap_svg, ramp_color, sampled_nodes_csv, ERROR_SERIES_HEADER,
    HEATMAP_HEADER, NODES_HEADER,
};
pub use pod::{
    collect_pod_snapshots, pod_baseline, projection_residual, PodBasis, PodSnapshots,
    DEFAULT_MAX_SNAPSHOTS,
};
pub use preset::{
    anisotropic_profile, build_preset, lattice_is_absorber, multiscale_sigma_s, preset,
    preset_params, with_epsilon, Preset, PresetName, PresetParams, Scale, LATTICE_ABSORBERS,
};
