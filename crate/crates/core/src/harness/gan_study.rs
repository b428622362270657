use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, TuningConfig};
use super::scenario::{first_with_both_labels, Simulator};
use crate::env::World;
use crate::error::{Error, Result};
use crate::gan::{augment_dataset, generate_proportional, train_cgan, CGanConfig, LossPoint};
use crate::jammer::collect_jammer_data;
use crate::nn::{error_rates, Activation, HyperParams};
use crate::rng::{derive_seed, stream};

/// Classifier used for every arm of the augmentation study, so that only
/// the training data differs between arms.
pub const STUDY_CLASSIFIER: HyperParams = HyperParams {
    hidden_layers: 2,
    width: 50,
    activation: Activation::Tanh,
};

/// Sample counts compared by default: few real, few real plus synthetic,
/// many real.
pub const DEFAULT_STUDY_ARMS: [(usize, usize); 3] = [(10, 0), (10, 500), (500, 0)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanStudyRow {
    pub seed: u64,
    pub n_real: usize,
    pub n_synthetic: usize,
    /// Errors on held-out real data.
    pub e_md: f64,
    pub e_fa: f64,
}

impl GanStudyRow {
    pub fn max_error(&self) -> f64 {
        self.e_md.max(self.e_fa)
    }
}

#[derive(Clone, Debug)]
pub struct GanStudyOutput {
    pub rows: Vec<GanStudyRow>,
    /// Loss trace of the GAN behind each augmented arm, in arm order.
    pub loss_traces: Vec<Vec<LossPoint>>,
}

/// Trains the jammer's classifier on each `(n_real, n_synthetic)` arm and
/// scores it on held-out real data from the same collection.
///
/// The collection is long enough that its first half holds the largest
/// real count. Real samples are the earliest ones of that half containing
/// both labels. Each arm picks its threshold on its own training set, as a
/// jammer with a short collection would have to.
pub fn run_gan_study(sim: &mut Simulator, cfg: &ScenarioConfig, arms: &[(usize, usize)]) -> Result<GanStudyOutput> {
    cfg.validate()?;
    if arms.is_empty() {
        return Err(Error::config("GAN study needs at least one arm"));
    }
    if arms.iter().any(|&(r, _)| r < 2) {
        return Err(Error::config("every arm needs at least two real samples"));
    }
    let mut world = World::new(cfg.world_params(), derive_seed(cfg.seed, "world", 0))?;
    let (mut transmitter, _) = sim.train_transmitter(cfg, &mut world)?;

    let k = cfg.jammer.window;
    let n_real_max = arms.iter().map(|a| a.0).max().unwrap_or(0);
    let slots = cfg.jammer.train_slots.max(2 * n_real_max + k - 1);
    let data = collect_jammer_data(&mut world, &mut transmitter, slots, k, cfg.beta)?;
    let (train_half, test) = data.split_half();
    test.require_both_labels()?;

    let model: CGanConfig = cfg.gan.map(|g| g.model).unwrap_or_default();
    let grid = TuningConfig::single(STUDY_CLASSIFIER).grid();
    let mut rows = Vec::with_capacity(arms.len());
    let mut loss_traces = Vec::new();
    for (i, &(n_real, n_synthetic)) in arms.iter().enumerate() {
        let real = first_with_both_labels(&train_half, n_real)?;
        let train_set = if n_synthetic == 0 {
            real
        } else {
            let mut rng = stream(cfg.seed, "gan-study/gan", i as u64);
            let (gan, trace) = train_cgan(&real, &model, &mut rng)?;
            loss_traces.push(trace);
            let synth = generate_proportional(&gan, &real, n_synthetic, &mut rng);
            augment_dataset(&real, &synth)?
        };
        let tuned = sim.tune(
            &train_set,
            &train_set,
            &grid,
            &cfg.training,
            derive_seed(cfg.seed, "gan-study/classifier", i as u64),
        )?;
        let scores = tuned.network.scores(&test)?;
        let (e_md, e_fa) = error_rates(&scores, test.labels(), tuned.choice.threshold)?;
        rows.push(GanStudyRow {
            seed: cfg.seed,
            n_real,
            n_synthetic,
            e_md,
            e_fa,
        });
    }
    Ok(GanStudyOutput { rows, loss_traces })
}
