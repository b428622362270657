use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{ChannelModel, Geometry, WorldParams};
use crate::error::{Error, Result};
use crate::gan::CGanConfig;
use crate::jammer::{JammerConfig, JammerKind, PowerBudget};
use crate::nn::{Activation, HyperParams, TrainConfig};
use crate::transmitter::DefenseConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JammerChoice {
    None,
    Dl,
    Sensing,
    Random,
}

impl JammerChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(JammerChoice::None),
            "dl" => Some(JammerChoice::Dl),
            "sensing" => Some(JammerChoice::Sensing),
            "random" => Some(JammerChoice::Random),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JammerChoice::None => "none",
            JammerChoice::Dl => "dl",
            JammerChoice::Sensing => "sensing",
            JammerChoice::Random => "random",
        }
    }
}

/// Whether the deep-learning jammer relearns during the adaptive defense
/// search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetrainPolicy {
    /// Collect fresh ACK-labeled data under the current defense level and
    /// refit before every measurement window.
    PerIteration,
    /// Keep the classifier trained before the search started.
    Never,
}

impl RetrainPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per-iteration" => Some(RetrainPolicy::PerIteration),
            "never" => Some(RetrainPolicy::Never),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub arrival_rate: f64,
    pub activation_prob: f64,
    pub background_power: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            arrival_rate: 0.2,
            activation_prob: 0.2,
            background_power: 1000.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmitterSection {
    pub power: f64,
    pub window: usize,
    pub train_slots: usize,
    pub defense: DefenseConfig,
}

impl Default for TransmitterSection {
    fn default() -> Self {
        TransmitterSection {
            power: 1000.0,
            window: 10,
            train_slots: 1000,
            defense: DefenseConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JammerSection {
    pub kind: JammerChoice,
    pub tau: f64,
    pub p_jam: f64,
    pub power: f64,
    pub window: usize,
    pub train_slots: usize,
    pub budget: Option<PowerBudget>,
    pub retrain: RetrainPolicy,
}

impl Default for JammerSection {
    fn default() -> Self {
        JammerSection {
            kind: JammerChoice::Dl,
            tau: 3.4,
            p_jam: 0.5,
            power: 1000.0,
            window: 10,
            train_slots: 1000,
            budget: None,
            retrain: RetrainPolicy::PerIteration,
        }
    }
}

impl JammerSection {
    pub fn jammer_config(&self) -> JammerConfig {
        let kind = match self.kind {
            JammerChoice::None => JammerKind::None,
            JammerChoice::Dl => JammerKind::DeepLearning,
            JammerChoice::Sensing => JammerKind::Sensing { tau: self.tau },
            JammerChoice::Random => JammerKind::Random { p_jam: self.p_jam },
        };
        JammerConfig {
            kind,
            fixed_power: self.power,
            budget: self.budget,
        }
    }
}

/// Classifier hyperparameter grid as the cartesian product of its axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub hidden_layers: Vec<usize>,
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            hidden_layers: vec![1, 2],
            widths: (20..=100).step_by(10).collect(),
            activations: vec![Activation::Sigmoid, Activation::Tanh],
        }
    }
}

impl TuningConfig {
    pub fn single(h: HyperParams) -> Self {
        TuningConfig {
            hidden_layers: vec![h.hidden_layers],
            widths: vec![h.width],
            activations: vec![h.activation],
        }
    }

    pub fn grid(&self) -> Vec<HyperParams> {
        let mut grid = Vec::new();
        for &hidden_layers in &self.hidden_layers {
            for &width in &self.widths {
                for &activation in &self.activations {
                    grid.push(HyperParams {
                        hidden_layers,
                        width,
                        activation,
                    });
                }
            }
        }
        grid
    }
}

/// Augment the jammer's training data with GAN samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GanSection {
    pub n_real: usize,
    pub n_synthetic: usize,
    #[serde(default)]
    pub model: CGanConfig,
}

/// Everything needed to run one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub beta: f64,
    pub eval_slots: usize,
    pub geometry: Geometry,
    pub channel: ChannelModel,
    pub traffic: TrafficConfig,
    pub transmitter: TransmitterSection,
    pub jammer: JammerSection,
    pub training: TrainConfig,
    pub tuning: TuningConfig,
    pub gan: Option<GanSection>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            beta: 3.0,
            eval_slots: 500,
            geometry: Geometry::default(),
            channel: ChannelModel::default(),
            traffic: TrafficConfig::default(),
            transmitter: TransmitterSection::default(),
            jammer: JammerSection::default(),
            training: TrainConfig::default(),
            tuning: TuningConfig::default(),
            gan: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text.as_bytes()[..s.start.min(text.len())].iter().filter(|&&b| b == b'\n').count() + 1)
                .unwrap_or(0);
            Error::parse(line, e.message().to_string())
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn world_params(&self) -> WorldParams {
        WorldParams {
            geometry: self.geometry,
            channel: self.channel,
            tx_power: self.transmitter.power,
            background_power: self.traffic.background_power,
            arrival_rate: self.traffic.arrival_rate,
            activation_prob: self.traffic.activation_prob,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config("beta must be positive"));
        }
        if self.eval_slots == 0 {
            return Err(Error::config("eval_slots must be at least 1"));
        }
        let t = &self.transmitter;
        let j = &self.jammer;
        if t.window == 0 || j.window == 0 {
            return Err(Error::config("sensing windows need at least one reading"));
        }
        if t.train_slots < 2 * t.window || j.train_slots < 2 * j.window {
            return Err(Error::config("training needs at least two windows of slots"));
        }
        if !(t.power >= 0.0 && t.power.is_finite()) {
            return Err(Error::config("transmit power must be non-negative"));
        }
        if !(self.traffic.background_power >= 0.0 && self.traffic.background_power.is_finite()) {
            return Err(Error::config("background power must be non-negative"));
        }
        t.defense.validate()?;
        self.geometry.validate()?;
        self.channel.validate()?;
        crate::env::BackgroundSourceState::new(self.traffic.arrival_rate, self.traffic.activation_prob)?;
        j.jammer_config().validate()?;
        self.training.validate()?;
        if self.tuning.grid().is_empty() {
            return Err(Error::config("hyperparameter grid is empty"));
        }
        if self.tuning.hidden_layers.contains(&0) || self.tuning.widths.contains(&0) {
            return Err(Error::config("grid layer counts and widths must be positive"));
        }
        if let Some(g) = &self.gan {
            if g.n_real < 2 {
                return Err(Error::config("GAN augmentation needs at least two real samples"));
            }
            g.model.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = ScenarioConfig::default();
        let text = cfg.to_toml();
        assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = ScenarioConfig::from_toml(
            "seed = 7\n[jammer]\nkind = \"sensing\"\ntau = 2.5\n[transmitter.defense]\np_d = 0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.jammer.kind, JammerChoice::Sensing);
        assert_eq!(cfg.jammer.tau, 2.5);
        assert_eq!(cfg.transmitter.defense.p_d, 0.2);
        assert_eq!(cfg.eval_slots, 500);
    }

    #[test]
    fn bad_files_are_config_errors() {
        let e = ScenarioConfig::from_toml("seed = 1\nbogus = 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        assert!(e.is_config_error());
        let mut cfg = ScenarioConfig::default();
        cfg.transmitter.defense.p_d = 1.5;
        assert!(cfg.validate().unwrap_err().is_config_error());
        let mut cfg = ScenarioConfig::default();
        cfg.geometry.jammer = cfg.geometry.receiver;
        assert!(cfg.validate().unwrap_err().is_config_error());
    }

    #[test]
    fn grid_matches_default() {
        assert_eq!(TuningConfig::default().grid(), crate::nn::default_grid());
    }
}
