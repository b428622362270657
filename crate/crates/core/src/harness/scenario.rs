use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::config::{JammerChoice, ScenarioConfig};
use crate::env::{SlotDraw, World};
use crate::error::{Error, Result};
use crate::gan::{augment_dataset, generate_proportional, train_cgan};
use crate::jammer::{calibrate_power_policy, collect_jammer_data, Jammer, PowerPolicy};
use crate::metrics::{compute_metrics, Metrics, SlotRecord, Subject};
use crate::nn::{tune_hyperparameters, Dataset, HyperParams, MlpNetwork, ThresholdChoice, TrainConfig};
use crate::rng::{derive_seed, stream};
use crate::transmitter::{collect_training_data, Transmitter};

/// A tuned classifier with its validation operating point.
#[derive(Clone, Debug)]
pub struct TunedClassifier {
    pub network: MlpNetwork,
    pub hyper: HyperParams,
    pub choice: ThresholdChoice,
}

/// How a scenario's classifiers came out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub transmitter_hyper: HyperParams,
    /// T's operating point on its held-out half.
    pub transmitter_validation: ThresholdChoice,
    pub jammer_hyper: Option<HyperParams>,
    pub jammer_validation: Option<ThresholdChoice>,
    pub jammer_training_samples: usize,
    pub power_policy: Option<PowerPolicy>,
    /// Mean power of the policy on its calibration scores.
    pub calibration_mean_power: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub transmitter: Metrics,
    pub jammer: Metrics,
    pub log: Vec<SlotRecord>,
    pub summary: TrainingSummary,
}

fn fingerprint(data: &Dataset) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(data.dim() as u64);
    for (x, y) in data.iter() {
        for v in x {
            eat(v.to_bits());
        }
        eat(u64::from(y));
    }
    h
}

/// Runs scenarios and remembers tuned classifiers, so sweeps that present
/// the same training data to the same grid do not retrain.
#[derive(Default)]
pub struct Simulator {
    cache: HashMap<(u64, u64, u64, String), TunedClassifier>,
}

impl Simulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tunes (or recalls) a classifier over `grid`.
    pub fn tune(
        &mut self,
        train: &Dataset,
        validation: &Dataset,
        grid: &[HyperParams],
        cfg: &TrainConfig,
        seed: u64,
    ) -> Result<TunedClassifier> {
        let key = (
            fingerprint(train),
            fingerprint(validation),
            seed,
            format!("{grid:?}{cfg:?}"),
        );
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let out = tune_hyperparameters(train, validation, grid, cfg, seed)?;
        let tuned = TunedClassifier {
            network: out.network,
            hyper: grid[out.best_index],
            choice: out.choice,
        };
        self.cache.insert(key, tuned.clone());
        Ok(tuned)
    }

    /// Phase (i): T senses for its training period and tunes its classifier
    /// on one half, choosing the threshold on the other.
    pub fn train_transmitter(&mut self, cfg: &ScenarioConfig, world: &mut World) -> Result<(Transmitter, TunedClassifier)> {
        let k = cfg.transmitter.window;
        let data = collect_training_data(world, cfg.transmitter.train_slots, k)?;
        let (tr, va) = data.split_half();
        let tuned = self.tune(
            &tr,
            &va,
            &cfg.tuning.grid(),
            &cfg.training,
            derive_seed(cfg.seed, "tune/transmitter", 0),
        )?;
        let t = Transmitter::new(tuned.network.clone(), k, cfg.transmitter.defense)?;
        Ok((t, tuned))
    }

    /// Fits the deep-learning jammer's classifier to ACK-labeled data and
    /// calibrates its power policy. `tag` separates the random streams of
    /// repeated fits within one scenario.
    pub fn train_jammer(
        &mut self,
        cfg: &ScenarioConfig,
        data: &Dataset,
        grid: &[HyperParams],
        tag: u64,
    ) -> Result<(Jammer, TunedClassifier, Option<PowerPolicy>, Option<f64>, usize)> {
        let (tr, va) = data.split_half();
        let seed = derive_seed(cfg.seed, "tune/jammer", tag);
        let (tuned, calib) = match &cfg.gan {
            None => (self.tune(&tr, &va, grid, &cfg.training, seed)?, tr),
            Some(g) => {
                let real = first_with_both_labels(&tr, g.n_real)?;
                let mut rng = stream(cfg.seed, "gan", tag);
                let (gan, _) = train_cgan(&real, &g.model, &mut rng)?;
                let synth = generate_proportional(&gan, &real, g.n_synthetic, &mut rng);
                let augmented = augment_dataset(&real, &synth)?;
                // The jammer only has its short collection: the threshold is
                // chosen on the augmented training set itself.
                (self.tune(&augmented, &augmented, grid, &cfg.training, seed)?, real)
            }
        };
        let n_train = calib.len();
        let threshold = tuned.choice.threshold;
        let (policy, calib_mean) = match cfg.jammer.budget {
            None => (PowerPolicy::flat(cfg.jammer.power, threshold), None),
            Some(b) => {
                let scores = tuned.network.scores(&calib)?;
                let p = calibrate_power_policy(&scores, b.p_min, b.p_max, b.p_avg, threshold)?;
                let m = p.mean_power(&scores);
                (p, Some(m))
            }
        };
        let jammer = Jammer::deep_learning(tuned.network.clone(), cfg.jammer.window, policy)?;
        let shown = cfg.jammer.budget.map(|_| policy);
        Ok((jammer, tuned, shown, calib_mean, n_train))
    }

    pub fn run_scenario(&mut self, cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
        cfg.validate()?;
        let mut world = World::new(cfg.world_params(), derive_seed(cfg.seed, "world", 0))?;
        let (mut transmitter, t_tuned) = self.train_transmitter(cfg, &mut world)?;

        // Phase (ii) runs for every jammer kind so that the evaluation
        // window sees the same channel realization whatever attacks it.
        let j_data = collect_jammer_data(
            &mut world,
            &mut transmitter,
            cfg.jammer.train_slots,
            cfg.jammer.window,
            cfg.beta,
        )?;
        let mut summary = TrainingSummary {
            transmitter_hyper: t_tuned.hyper,
            transmitter_validation: t_tuned.choice,
            jammer_hyper: None,
            jammer_validation: None,
            jammer_training_samples: j_data.len(),
            power_policy: None,
            calibration_mean_power: None,
        };
        let mut jammer = match cfg.jammer.kind {
            JammerChoice::None => Jammer::None,
            JammerChoice::Sensing => Jammer::Sensing {
                tau: cfg.jammer.tau,
                power: cfg.jammer.power,
            },
            JammerChoice::Random => Jammer::Random {
                p_jam: cfg.jammer.p_jam,
                power: cfg.jammer.power,
                rng: stream(cfg.seed, "random-jammer", 0),
            },
            JammerChoice::Dl => {
                let (j, tuned, policy, calib, n) = self.train_jammer(cfg, &j_data, &cfg.tuning.grid(), 0)?;
                summary.jammer_hyper = Some(tuned.hyper);
                summary.jammer_validation = Some(tuned.choice);
                summary.jammer_training_samples = n;
                summary.power_policy = policy;
                summary.calibration_mean_power = calib;
                j
            }
        };

        let log = run_window(&mut world, &mut transmitter, &mut jammer, cfg.eval_slots, cfg.beta)?;
        Ok(ScenarioOutput {
            transmitter: compute_metrics(&log, Subject::Transmitter)?,
            jammer: compute_metrics(&log, Subject::Jammer)?,
            log,
            summary,
        })
    }
}

/// Convenience wrapper with a fresh [`Simulator`].
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    Simulator::new().run_scenario(cfg)
}

/// The first `n` samples of `data`, shifted forward until both labels
/// appear.
pub fn first_with_both_labels(data: &Dataset, n: usize) -> Result<Dataset> {
    if n > data.len() {
        return Err(Error::config(format!(
            "asked for {n} real samples, only {} collected",
            data.len()
        )));
    }
    for start in 0..=data.len() - n {
        let s = data.slice(start, start + n);
        if s.has_both_labels() {
            return Ok(s);
        }
    }
    Err(Error::DegenerateDataset(
        "no run of samples contains both labels".into(),
    ))
}

/// Runs `slots` slots with both agents active and logs them. Slots where
/// T's window is still filling are not logged.
pub fn run_window(
    world: &mut World,
    transmitter: &mut Transmitter,
    jammer: &mut Jammer,
    slots: usize,
    beta: f64,
) -> Result<Vec<SlotRecord>> {
    let batch = transmitter.defense().window;
    let mut log = Vec::with_capacity(slots);
    let mut left = slots;
    while left > 0 {
        let n = left.min(batch);
        let draws: Vec<SlotDraw> = (0..n).map(|_| world.step()).collect();
        let plan = transmitter.plan(&draws)?;
        for (d, tx) in draws.iter().zip(&plan) {
            let act = jammer.act(world, d, tx.transmit)?;
            if !tx.ready {
                continue;
            }
            let o = world.resolve(d, tx.transmit, act.power, beta);
            log.push(SlotRecord {
                slot: d.slot,
                channel_busy: d.busy,
                t_transmitted: tx.transmit,
                t_score: tx.score,
                flipped: tx.flipped,
                jam_decision: act.jam,
                jam_power: act.power,
                success: o.success,
                counterfactual_success: o.counterfactual_success,
                ack: o.success,
            });
        }
        left -= n;
    }
    Ok(log)
}
