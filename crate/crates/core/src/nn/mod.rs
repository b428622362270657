//! Small fully-connected networks trained from scratch.
//!
//! Classifiers have a two-unit softmax output. Their score is the
//! probability of the second unit, and a sample is classified positive when
//! its score is at or below the tuned threshold.

mod dataset;
mod io;
mod network;
mod optim;
mod threshold;
mod train;
mod tune;

pub use dataset::Dataset;
pub use network::{
    init_network, softmax_into, Activation, Init, MlpNetwork, Mode, NetworkSpec, Normalizer,
    OutputKind, RunningStats,
};
pub use optim::{Optimizer, OptimizerKind};
pub use threshold::{error_rates, select_threshold, ThresholdChoice};
pub use train::{binary_softmax_loss, gradient_check, train, TrainConfig, TrainReport};
pub use tune::{default_grid, tune_hyperparameters, Candidate, CandidateScore, HyperParams, TuneOutcome};

