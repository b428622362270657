use serde::{Deserialize, Serialize};

use super::config::{GanSection, JammerChoice, ScenarioConfig};
use super::scenario::Simulator;
use crate::error::{Error, Result};
use crate::jammer::PowerBudget;
use crate::metrics::Metrics;

/// Lower power bound of budgeted jammers in power-budget sweeps.
pub const SWEEP_P_MIN: f64 = 500.0;

/// Radius of the mobility circles and the admissible distance range on them.
pub const CIRCLE_RADIUS: f64 = 10.0;
pub const CIRCLE_MIN: f64 = CIRCLE_RADIUS * (std::f64::consts::SQRT_2 - 1.0);
pub const CIRCLE_MAX: f64 = CIRCLE_RADIUS * (std::f64::consts::SQRT_2 + 1.0);
// Distances quoted to two decimals should still land on the circle.
const CIRCLE_SLACK: f64 = 1e-2;

/// The parameter a sweep varies. Every other setting comes from the base
/// configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "kebab-case")]
pub enum SweepAxis {
    JammerType(Vec<JammerChoice>),
    /// Sensing jammer thresholds.
    Tau(Vec<f64>),
    /// Deep-learning jammer average power, as fractions of the base jamming
    /// power, which becomes `p_max`.
    PAvg(Vec<f64>),
    /// Transmitter defense levels.
    PD(Vec<f64>),
    /// J on the circle of radius 10 around R; values are d_BJ.
    CircleR(Vec<f64>),
    /// J on the circle of radius 10 around B; values are d_JR.
    CircleB(Vec<f64>),
    /// (real, synthetic) sample counts for the deep-learning jammer.
    GanCounts(Vec<(usize, usize)>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::JammerType(_) => "jammer-type",
            SweepAxis::Tau(_) => "tau",
            SweepAxis::PAvg(_) => "p_avg",
            SweepAxis::PD(_) => "p_d",
            SweepAxis::CircleR(_) => "mobility-circle-R",
            SweepAxis::CircleB(_) => "mobility-circle-B",
            SweepAxis::GanCounts(_) => "gan-counts",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::JammerType(v) => v.len(),
            SweepAxis::GanCounts(v) => v.len(),
            SweepAxis::Tau(v) | SweepAxis::PAvg(v) | SweepAxis::PD(v) | SweepAxis::CircleR(v) | SweepAxis::CircleB(v) => {
                v.len()
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn label(&self, i: usize) -> String {
        match self {
            SweepAxis::JammerType(v) => v[i].name().to_string(),
            SweepAxis::GanCounts(v) => format!("{}+{}", v[i].0, v[i].1),
            SweepAxis::Tau(v) | SweepAxis::PAvg(v) | SweepAxis::PD(v) | SweepAxis::CircleR(v) | SweepAxis::CircleB(v) => {
                v[i].to_string()
            }
        }
    }

    /// The configuration for point `i`.
    pub fn apply(&self, base: &ScenarioConfig, i: usize) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::JammerType(v) => cfg.jammer.kind = v[i],
            SweepAxis::Tau(v) => {
                cfg.jammer.kind = JammerChoice::Sensing;
                cfg.jammer.tau = v[i];
            }
            SweepAxis::PAvg(v) => {
                cfg.jammer.kind = JammerChoice::Dl;
                cfg.jammer.budget = Some(PowerBudget {
                    p_min: SWEEP_P_MIN,
                    p_max: base.jammer.power,
                    p_avg: v[i] * base.jammer.power,
                });
            }
            SweepAxis::PD(v) => cfg.transmitter.defense.p_d = v[i],
            SweepAxis::CircleR(v) => {
                cfg.geometry = base
                    .geometry
                    .with_jammer_around_receiver(CIRCLE_RADIUS, clamp_circle(v[i]))?;
            }
            SweepAxis::CircleB(v) => {
                cfg.geometry = base
                    .geometry
                    .with_jammer_around_background(CIRCLE_RADIUS, clamp_circle(v[i]))?;
            }
            SweepAxis::GanCounts(v) => {
                let model = base.gan.map(|g| g.model).unwrap_or_default();
                cfg.jammer.kind = JammerChoice::Dl;
                cfg.gan = Some(GanSection {
                    n_real: v[i].0,
                    n_synthetic: v[i].1,
                    model,
                });
            }
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::config(format!("{} sweep has no values", self.name())));
        }
        if let SweepAxis::CircleR(v) | SweepAxis::CircleB(v) = self {
            if let Some(d) = v
                .iter()
                .find(|&&d| !(CIRCLE_MIN - CIRCLE_SLACK..=CIRCLE_MAX + CIRCLE_SLACK).contains(&d))
            {
                return Err(Error::config(format!(
                    "distance {d} is off the mobility circle [{CIRCLE_MIN:.4}, {CIRCLE_MAX:.4}]"
                )));
            }
        }
        Ok(())
    }
}

fn clamp_circle(d: f64) -> f64 {
    d.clamp(CIRCLE_MIN, CIRCLE_MAX)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(flatten)]
    pub axis: SweepAxis,
    /// Seeds per point: `base.seed`, `base.seed + 1`, ...
    pub replications: usize,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis) -> Self {
        SweepSpec {
            axis,
            replications: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("a sweep needs at least one replication"));
        }
        self.axis.validate()
    }
}

/// One (point, seed) result, flattened for tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub point: usize,
    pub value: String,
    pub seed: u64,
    pub throughput: f64,
    pub success_ratio: Option<f64>,
    pub t_e_md: Option<f64>,
    pub t_e_fa: Option<f64>,
    pub j_e_md: Option<f64>,
    pub j_e_fa: Option<f64>,
    pub mean_jam_power: f64,
    pub n_slots: usize,
    pub n_transmissions: usize,
    pub n_successes: usize,
}

impl SweepRow {
    pub fn new(axis: &str, point: usize, value: String, seed: u64, t: &Metrics, j: &Metrics) -> Self {
        SweepRow {
            axis: axis.to_string(),
            point,
            value,
            seed,
            throughput: t.throughput,
            success_ratio: t.success_ratio,
            t_e_md: t.e_md,
            t_e_fa: t.e_fa,
            j_e_md: j.e_md,
            j_e_fa: j.e_fa,
            mean_jam_power: t.mean_jam_power,
            n_slots: t.n_slots,
            n_transmissions: t.n_transmissions,
            n_successes: t.n_successes,
        }
    }

    /// Jammer max{e_MD, e_FA}; a missing class counts as zero error.
    pub fn jammer_max_error(&self) -> f64 {
        self.j_e_md.unwrap_or(0.0).max(self.j_e_fa.unwrap_or(0.0))
    }
}

/// Runs every (point, seed) pair, points outermost.
pub fn run_sweep(sim: &mut Simulator, base: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.axis.len() * spec.replications);
    for i in 0..spec.axis.len() {
        let point = spec.axis.apply(base, i)?;
        for r in 0..spec.replications {
            let mut cfg = point.clone();
            cfg.seed = base.seed.wrapping_add(r as u64);
            let out = sim.run_scenario(&cfg)?;
            rows.push(SweepRow::new(
                spec.axis.name(),
                i,
                spec.axis.label(i),
                cfg.seed,
                &out.transmitter,
                &out.jammer,
            ));
        }
    }
    Ok(rows)
}

/// Mean of `f` over the rows of each point, in point order.
pub fn point_means(rows: &[SweepRow], f: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
    let n = rows.iter().map(|r| r.point + 1).max().unwrap_or(0);
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for r in rows {
        sum[r.point] += f(r);
        count[r.point] += 1;
    }
    sum.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect()
}
