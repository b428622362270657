use serde::{Deserialize, Serialize};

use super::config::{JammerChoice, RetrainPolicy, ScenarioConfig, TuningConfig};
use super::scenario::{run_window, Simulator};
use crate::env::World;
use crate::error::Result;
use crate::jammer::{collect_jammer_data, Jammer};
use crate::metrics::{compute_metrics, Subject};
use crate::rng::{derive_seed, stream};
use crate::transmitter::{AdaptiveDefense, DefenseConfig};

/// One measurement window of the adaptive search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveStep {
    pub iteration: usize,
    pub p_d: f64,
    pub throughput: f64,
    pub jammer_e_md: Option<f64>,
    pub jammer_e_fa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOutcome {
    /// The level the search settled on.
    pub p_d: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trajectory: Vec<AdaptiveStep>,
}

/// Most measurements the search may use.
pub const MAX_ADAPTIVE_ITERATIONS: usize = 15;

/// Trains T, then searches the defense level: every iteration runs one
/// evaluation window at the current level and feeds the throughput to the
/// search. A deep-learning jammer first learns under the current level when
/// `cfg.jammer.retrain` asks for it; retraining keeps the architecture
/// chosen by the initial tuning.
///
/// Every iteration replays the same channel realization from the state
/// reached after T's training, so throughput differences between
/// iterations come from the defense level rather than from traffic.
pub fn run_adaptive(sim: &mut Simulator, cfg: &ScenarioConfig) -> Result<AdaptiveOutcome> {
    cfg.validate()?;
    let mut world = World::new(cfg.world_params(), derive_seed(cfg.seed, "world", 0))?;
    let (transmitter0, _) = sim.train_transmitter(cfg, &mut world)?;
    let world0 = world;
    let window = transmitter0.defense().window;
    let set_level = |t: &mut crate::transmitter::Transmitter, p_d: f64| {
        t.set_defense(DefenseConfig { p_d, window })
    };

    let mut search = AdaptiveDefense::new();
    let jammer0 = match cfg.jammer.kind {
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
        JammerChoice::Dl => Jammer::None,
    };
    let mut trained: Option<Jammer> = None;
    let mut dl_tuning: Option<TuningConfig> = None;

    let mut trajectory = Vec::new();
    while !search.is_converged() && trajectory.len() < MAX_ADAPTIVE_ITERATIONS {
        let p_d = search.current();
        let mut world = world0.clone();
        let mut transmitter = transmitter0.clone();
        set_level(&mut transmitter, p_d)?;
        let iteration = trajectory.len();
        // The collection period runs for every kind, as in a scenario, so
        // all iterations evaluate the same slots.
        let data = collect_jammer_data(
            &mut world,
            &mut transmitter,
            cfg.jammer.train_slots,
            cfg.jammer.window,
            cfg.beta,
        )?;
        if cfg.jammer.kind == JammerChoice::Dl
            && (trained.is_none() || cfg.jammer.retrain == RetrainPolicy::PerIteration)
        {
            let grid = dl_tuning.as_ref().unwrap_or(&cfg.tuning).grid();
            let (j, tuned, ..) = sim.train_jammer(cfg, &data, &grid, iteration as u64)?;
            dl_tuning.get_or_insert_with(|| TuningConfig::single(tuned.hyper));
            trained = Some(j);
        }
        let mut jammer = trained.clone().unwrap_or_else(|| jammer0.clone());
        let log = run_window(&mut world, &mut transmitter, &mut jammer, cfg.eval_slots, cfg.beta)?;
        let t = compute_metrics(&log, Subject::Transmitter)?;
        let j = compute_metrics(&log, Subject::Jammer)?;
        trajectory.push(AdaptiveStep {
            iteration,
            p_d,
            throughput: t.throughput,
            jammer_e_md: j.e_md,
            jammer_e_fa: j.e_fa,
        });
        search.observe(t.throughput);
    }
    Ok(AdaptiveOutcome {
        p_d: search.incumbent(),
        iterations: search.iterations(),
        converged: search.is_converged(),
        trajectory,
    })
}
