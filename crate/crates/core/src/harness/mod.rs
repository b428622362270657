//! Scenario configuration and the experiment runners built on it.

mod adaptive;
mod config;
mod export;
mod gan_study;
mod scenario;
mod sweep;

pub use adaptive::{run_adaptive, AdaptiveOutcome, AdaptiveStep, MAX_ADAPTIVE_ITERATIONS};
pub use config::{
    GanSection, JammerChoice, JammerSection, RetrainPolicy, ScenarioConfig, TrafficConfig,
    TransmitterSection, TuningConfig,
};
pub use export::{export_results, load_results, write_table, ExportFormat, Tabular};
pub use gan_study::{run_gan_study, GanStudyOutput, GanStudyRow, DEFAULT_STUDY_ARMS, STUDY_CLASSIFIER};
pub use scenario::{
    first_with_both_labels, run_scenario, run_window, ScenarioOutput, Simulator, TrainingSummary,
    TunedClassifier,
};
pub use sweep::{
    point_means, run_sweep, SweepAxis, SweepRow, SweepSpec, CIRCLE_MAX, CIRCLE_MIN, CIRCLE_RADIUS,
    SWEEP_P_MIN,
};
