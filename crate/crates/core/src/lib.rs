//! Discrete-time simulator of a learning-based jamming game on one wireless
//! channel.
//!
//! A cognitive transmitter senses the channel and uses a small neural
//! classifier to decide when to transmit. A jammer observes the same channel,
//! learns from the receiver's acknowledgements when transmissions succeed and
//! jams them, optionally under an average power budget and with a
//! conditional GAN to stretch a small training set. The transmitter can
//! defend itself by deliberately acting against its own classifier on a
//! fraction of slots, which poisons the jammer's training data.
//!
//! Modules:
//! - [`env`]: propagation, background traffic, sensing and reception.
//! - [`nn`]: feed-forward networks, training, thresholds and grid search.
//! - [`transmitter`]: features, transmit decisions and the flip defense.
//! - [`jammer`]: deep-learning, sensing and random jammers and power control.
//! - [`gan`]: conditional GAN for training-set augmentation.
//! - [`metrics`]: slot logs and error/throughput measures.
//! - [`harness`]: scenarios, sweeps, configuration and export.

pub mod env;
pub mod error;
pub mod gan;
pub mod harness;
pub mod jammer;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod transmitter;

pub use error::{Error, Result};
