//! Experiment plumbing: synthetic data, the end-to-end pipeline, metrics,
//! configuration and reports.

mod config;
mod experiment;
mod gradcheck;
mod metrics;
mod report;
mod sweep;
mod synth;

pub use experiment::{
    baseline_from, darec_from, default_orientation, pretrain, run_baseline, run_experiment, run_experiment_full,
    run_with_baseline, watchdog, EvalInput, Outcome, Predictor, Pretrained, TrainConfig,
};
pub use config::{apply_override, parse_config, ConfigMap, DataSource, RunConfig, KEYS};
pub use gradcheck::{
    gradcheck_suite, grl_reference_gap, ComponentCheck, COMPONENTS, FD_STEP, GRAD_TOLERANCE, REFERENCE_TOLERANCE,
};
pub use metrics::{rmse, MeanStd};
pub use report::{reports_csv, Report, CSV_HEADER};
pub use sweep::{interior_minimum, sweep, SweepAxis};
pub use synth::{synth_generate, SynthConfig, Synthetic};
