//! Experiment orchestration: pipelines, dataset IO, benchmark and sweep
//! runners, report writers, and the TOML config schemas behind the CLI.

pub mod bench;
pub mod config;
pub mod csit;
pub mod pipeline;
pub mod report;
pub mod sweep;

pub use bench::{run_generalization_benchmark, GeneralizationReport, VariantEnvResult, W1Matrix};
pub use config::{
    load_toml, seed_override, ExperimentConfig, GenConfig, GeometryConfig, PipelineParams,
    SweepFileConfig, TrainFileConfig, TrainingParams, SEED_ENV_VAR,
};
pub use csit::{read_csit, write_csit, CsitHeader};
pub use pipeline::{
    build_training_set, Pipeline, PipelineRun, PipelineVariant, StageRecord, VariantKind,
};
pub use sweep::{run_noise_sweep, run_overhead_sweep, NoiseSweepReport, OverheadSweepReport};
