//! Jammer variants and score-driven jamming power control.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{SlotDraw, World};
use crate::error::{Error, Result};
use crate::nn::{Dataset, MlpNetwork};
use crate::rng::SimRng;
use crate::transmitter::{SensingHistory, SensingWindow, Transmitter};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JammerKind {
    None,
    /// Learns from ACKs when transmissions succeed.
    DeepLearning,
    /// Jams when its in-slot energy reading exceeds `tau`.
    Sensing { tau: f64 },
    /// Jams each slot with probability `p_jam`.
    Random { p_jam: f64 },
}

/// Average-power budget for the deep-learning jammer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBudget {
    pub p_min: f64,
    pub p_max: f64,
    pub p_avg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammerConfig {
    pub kind: JammerKind,
    /// Power of every jamming burst unless a budget is configured.
    pub fixed_power: f64,
    pub budget: Option<PowerBudget>,
}

impl Default for JammerConfig {
    fn default() -> Self {
        JammerConfig {
            kind: JammerKind::DeepLearning,
            fixed_power: 1000.0,
            budget: None,
        }
    }
}

impl JammerConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            JammerKind::Sensing { tau } if !(tau > 0.0 && tau.is_finite()) => {
                return Err(Error::config("sensing threshold tau must be positive"));
            }
            JammerKind::Random { p_jam } if !(0.0..=1.0).contains(&p_jam) => {
                return Err(Error::config("p_jam must lie in [0, 1]"));
            }
            _ => {}
        }
        if !(self.fixed_power >= 0.0 && self.fixed_power.is_finite()) {
            return Err(Error::config("jamming power must be non-negative"));
        }
        if let Some(b) = self.budget {
            if !(b.p_min > 0.0 && b.p_min < b.p_max && b.p_max.is_finite()) {
                return Err(Error::config("power budget needs 0 < p_min < p_max"));
            }
            if !(b.p_avg >= 0.0 && b.p_avg.is_finite()) {
                return Err(Error::config("p_avg must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Deep-learning jammer decision: jam iff the no-ACK score is at or below
/// the threshold `S`.
pub fn decide_jam(classifier: &MlpNetwork, window: &SensingWindow) -> Result<(bool, f64)> {
    classifier.decide(&window.features())
}

/// Jam iff the reading is strictly above `tau`.
pub fn sensing_jam_decide(rssi: f64, tau: f64) -> bool {
    rssi > tau
}

/// Bernoulli(`p_jam`), independent of everything else.
pub fn random_jam_decide<R: Rng + ?Sized>(p_jam: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p_jam
}

/// Runs the world with T operating and J listening for `n_slots`. Each of
/// J's sensing windows is labeled ACK (positive) iff T's transmission in
/// that slot succeeded. J does not jam while collecting.
pub fn collect_jammer_data(
    world: &mut World,
    transmitter: &mut Transmitter,
    n_slots: usize,
    k: usize,
    beta: f64,
) -> Result<Dataset> {
    let mut history = SensingHistory::new(k)?;
    let mut data = Dataset::new(k);
    let window = transmitter.defense().window;
    let mut left = n_slots;
    while left > 0 {
        let n = left.min(window);
        let draws: Vec<SlotDraw> = (0..n).map(|_| world.step()).collect();
        let plan = transmitter.plan(&draws)?;
        for (d, tx) in draws.iter().zip(&plan) {
            history.push(d.rssi_j);
            let outcome = world.resolve(d, tx.transmit, 0.0, beta);
            if let Ok(w) = history.window() {
                data.push(&w.features(), outcome.success)?;
            }
        }
        left -= n;
    }
    Ok(data)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PowerMode {
    /// The budget does not allow a single burst on the calibration set.
    Off,
    /// `p_min` for scores up to `cutoff`, nothing above.
    MinBelowCutoff { cutoff: f64 },
    /// `p_max` for every score up to `S`.
    MaxFlat,
    /// `p_max - c1 * s`.
    Linear,
    /// `max(p_max - c * s, p_min)` with `c > c1`.
    SteeperClampedLow { c: f64 },
    /// `min(p_min + c * (S - s), p_max)` with `c > c1`.
    SteeperClampedHigh { c: f64 },
}

/// Decreasing map from the jammer's score to its transmit power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerPolicy {
    pub p_min: f64,
    pub p_max: f64,
    pub p_avg: f64,
    pub score_threshold: f64,
    pub mode: PowerMode,
    /// Slope of the plain linear ramp, `(p_max - p_min) / S`.
    pub c1: f64,
}

impl PowerPolicy {
    /// A policy that always uses `power` on slots classified ACK.
    pub fn flat(power: f64, score_threshold: f64) -> Self {
        PowerPolicy {
            p_min: power,
            p_max: power,
            p_avg: power,
            score_threshold,
            mode: PowerMode::MaxFlat,
            c1: 0.0,
        }
    }

    pub fn power(&self, s: f64) -> f64 {
        jam_power(self, s)
    }

    /// Mean power over a set of scores, counting scores above `S` as zero.
    pub fn mean_power(&self, scores: &[f64]) -> f64 {
        if scores.is_empty() {
            return 0.0;
        }
        scores.iter().map(|&s| self.power(s)).sum::<f64>() / scores.len() as f64
    }
}

/// Evaluates the policy at score `s`.
pub fn jam_power(policy: &PowerPolicy, s: f64) -> f64 {
    let p = policy;
    if s > p.score_threshold {
        return 0.0;
    }
    match p.mode {
        PowerMode::Off => 0.0,
        PowerMode::MinBelowCutoff { cutoff } => {
            if s <= cutoff {
                p.p_min
            } else {
                0.0
            }
        }
        PowerMode::MaxFlat => p.p_max,
        PowerMode::Linear => (p.p_max - p.c1 * s).clamp(p.p_min, p.p_max),
        PowerMode::SteeperClampedLow { c } => (p.p_max - c * s).max(p.p_min),
        PowerMode::SteeperClampedHigh { c } => (p.p_min + c * (p.score_threshold - s)).min(p.p_max),
    }
}

const BISECTION_REL_TOL: f64 = 1e-9;

/// Chooses the power curve for a budget.
///
/// `scores` are the jammer's scores on its calibration (training) slots,
/// including slots it would not jam. The mean power of a candidate curve is
/// its average over all of them, with zero for scores above `S`. Cases, in
/// order: if even flat `p_min` is over budget, jam at `p_min` only on the
/// lowest scores that fit; if flat `p_max` fits, use it; otherwise pick the
/// steepness of the ramp from `p_max` at 0 to `p_min` that spends exactly the
/// budget.
pub fn calibrate_power_policy(
    scores: &[f64],
    p_min: f64,
    p_max: f64,
    p_avg: f64,
    score_threshold: f64,
) -> Result<PowerPolicy> {
    if !(p_min > 0.0 && p_min < p_max && p_max.is_finite()) {
        return Err(Error::config("power policy needs 0 < p_min < p_max"));
    }
    if !(p_avg >= 0.0 && p_avg.is_finite()) {
        return Err(Error::config("p_avg must be non-negative"));
    }
    if !(score_threshold > 0.0 && score_threshold.is_finite()) {
        return Err(Error::config("score threshold must be positive"));
    }
    if scores.is_empty() || scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::DegenerateDataset("no calibration scores".into()));
    }
    let c1 = (p_max - p_min) / score_threshold;
    let base = PowerPolicy {
        p_min,
        p_max,
        p_avg,
        score_threshold,
        mode: PowerMode::MaxFlat,
        c1,
    };
    let with = |mode| PowerPolicy { mode, ..base };

    let n = scores.len() as f64;
    let jammed = scores.iter().filter(|&&s| s <= score_threshold).count();
    let p1 = p_min * jammed as f64 / n;
    let p2 = p_max * jammed as f64 / n;
    let p3 = with(PowerMode::Linear).mean_power(scores);

    if p1 >= p_avg {
        return Ok(min_below_cutoff(scores, base, n));
    }
    if p2 <= p_avg {
        return Ok(base);
    }
    if (p3 - p_avg).abs() <= BISECTION_REL_TOL * p_avg {
        return Ok(with(PowerMode::Linear));
    }
    let mean_at = |mode| with(mode).mean_power(scores);
    if p3 > p_avg {
        // Steeper descent lowers the mean; keep the feasible (upper) end.
        let f = |c| mean_at(PowerMode::SteeperClampedLow { c });
        let lo = c1;
        let mut hi = 2.0 * c1;
        while f(hi) > p_avg {
            hi *= 2.0;
            if !hi.is_finite() || hi > 1e300 {
                // Mass at s = 0 keeps the mean above budget for every slope.
                return Ok(min_below_cutoff(scores, base, n));
            }
        }
        let c = bisect(lo, hi, |c| f(c) <= p_avg);
        Ok(with(PowerMode::SteeperClampedLow { c }))
    } else {
        // Steeper ascent raises the mean; keep the feasible (lower) end.
        let f = |c| mean_at(PowerMode::SteeperClampedHigh { c });
        let mut hi = 2.0 * c1;
        while f(hi) <= p_avg {
            hi *= 2.0;
            if !hi.is_finite() || hi > 1e300 {
                return Ok(with(PowerMode::SteeperClampedHigh { c: hi / 2.0 }));
            }
        }
        let c = bisect(c1, hi, |c| f(c) <= p_avg);
        Ok(with(PowerMode::SteeperClampedHigh { c }))
    }
}

/// Bisects until the bracket is within the relative tolerance and returns
/// the end of the bracket for which `feasible` holds. Exactly one end is
/// feasible at the start.
fn bisect<F: Fn(f64) -> bool>(mut a: f64, mut b: f64, feasible: F) -> f64 {
    let a_ok = feasible(a);
    debug_assert_ne!(a_ok, feasible(b));
    for _ in 0..2000 {
        if (b - a).abs() <= BISECTION_REL_TOL * a.abs().max(b.abs()) {
            break;
        }
        let m = 0.5 * (a + b);
        if feasible(m) == a_ok {
            a = m;
        } else {
            b = m;
        }
    }
    if a_ok {
        a
    } else {
        b
    }
}

/// Largest cutoff such that jamming at `p_min` on scores up to it stays
/// within budget on the calibration set.
fn min_below_cutoff(scores: &[f64], base: PowerPolicy, n: f64) -> PowerPolicy {
    let allowed = (base.p_avg * n / base.p_min + 1e-9).floor() as usize;
    let mut below: Vec<f64> = scores
        .iter()
        .copied()
        .filter(|&s| s <= base.score_threshold)
        .collect();
    below.sort_by(f64::total_cmp);
    if allowed >= below.len() {
        return PowerPolicy {
            mode: PowerMode::MinBelowCutoff {
                cutoff: base.score_threshold,
            },
            ..base
        };
    }
    // The first score that cannot be afforded, and the boundary of its tie
    // group: everything strictly below the group is affordable iff the
    // group starts at or before `allowed`.
    let blocked = below[allowed];
    let start = below.partition_point(|&s| s < blocked);
    if start == 0 {
        return PowerPolicy {
            mode: PowerMode::Off,
            ..base
        };
    }
    let cutoff = 0.5 * (below[start - 1] + blocked);
    PowerPolicy {
        mode: PowerMode::MinBelowCutoff { cutoff },
        ..base
    }
}

/// Outcome of one jamming decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JamAction {
    pub jam: bool,
    pub power: f64,
    /// Classifier score for the deep-learning jammer.
    pub score: Option<f64>,
}

impl JamAction {
    fn idle(score: Option<f64>) -> Self {
        JamAction {
            jam: false,
            power: 0.0,
            score,
        }
    }
}

/// An operating jammer.
#[derive(Clone, Debug)]
pub enum Jammer {
    None,
    DeepLearning {
        classifier: MlpNetwork,
        history: SensingHistory,
        policy: PowerPolicy,
    },
    Sensing {
        tau: f64,
        power: f64,
    },
    Random {
        p_jam: f64,
        power: f64,
        rng: SimRng,
    },
}

impl Jammer {
    pub fn deep_learning(classifier: MlpNetwork, k: usize, policy: PowerPolicy) -> Result<Self> {
        if classifier.threshold().is_none() {
            return Err(Error::Untrained);
        }
        Ok(Jammer::DeepLearning {
            classifier,
            history: SensingHistory::new(k)?,
            policy,
        })
    }

    /// Observes the slot and decides. J's pre-slot reading feeds the
    /// deep-learning window; the sensing jammer reacts to its in-slot
    /// energy measurement, which includes T's signal when T transmits.
    pub fn act(&mut self, world: &World, draw: &SlotDraw, t_transmits: bool) -> Result<JamAction> {
        match self {
            Jammer::None => Ok(JamAction::idle(None)),
            Jammer::DeepLearning {
                classifier,
                history,
                policy,
            } => {
                history.push(draw.rssi_j);
                let Ok(w) = history.window() else {
                    return Ok(JamAction::idle(None));
                };
                let (ack_predicted, s) = decide_jam(classifier, &w)?;
                let power = if ack_predicted { policy.power(s) } else { 0.0 };
                Ok(JamAction {
                    jam: power > 0.0,
                    power,
                    score: Some(s),
                })
            }
            Jammer::Sensing { tau, power } => {
                let reading = world.jammer_probe(draw, t_transmits);
                let jam = sensing_jam_decide(reading, *tau);
                Ok(JamAction {
                    jam,
                    power: if jam { *power } else { 0.0 },
                    score: None,
                })
            }
            Jammer::Random { p_jam, power, rng } => {
                let jam = random_jam_decide(*p_jam, rng);
                Ok(JamAction {
                    jam,
                    power: if jam { *power } else { 0.0 },
                    score: None,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn sensing_and_random_rules() {
        assert!(!sensing_jam_decide(3.0, 3.0));
        assert!(sensing_jam_decide(3.0001, 3.0));
        assert!(!sensing_jam_decide(1e12, f64::INFINITY));
        let mut rng = stream(1, "rj", 0);
        assert!((0..1000).all(|_| !random_jam_decide(0.0, &mut rng)));
        assert!((0..1000).all(|_| random_jam_decide(1.0, &mut rng)));
        let hits = (0..10_000).filter(|_| random_jam_decide(0.5, &mut rng)).count();
        assert!((hits as f64 / 1e4 - 0.5).abs() < 0.015);
    }

    fn uniform_scores(n: usize, s: f64) -> Vec<f64> {
        (0..n).map(|i| s * (i as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn flat_max_when_budget_allows() {
        let scores = [0.1, 0.2, 0.9, 0.95];
        // Half the slots jammed at 1000 -> mean 500.
        let p = calibrate_power_policy(&scores, 500.0, 1000.0, 500.0, 0.5).unwrap();
        assert_eq!(p.mode, PowerMode::MaxFlat);
        assert_eq!(p.power(0.3), 1000.0);
        assert_eq!(p.power(0.5), 1000.0);
        assert_eq!(p.power(0.5 + 1e-12), 0.0);
    }

    #[test]
    fn linear_ramp_endpoints() {
        let s = 0.4;
        let scores = uniform_scores(1000, s);
        let p3 = calibrate_power_policy(&scores, 500.0, 1000.0, 1e9, s)
            .map(|p| PowerPolicy { mode: PowerMode::Linear, ..p })
            .unwrap();
        assert_eq!(p3.power(0.0), 1000.0);
        assert!((p3.power(s) - 500.0).abs() < 1e-9);
        assert!((p3.power(s / 2.0) - 750.0).abs() < 1e-9);
        // With the budget equal to the ramp's own mean, the ramp is chosen.
        let mean = p3.mean_power(&scores);
        let p = calibrate_power_policy(&scores, 500.0, 1000.0, mean, s).unwrap();
        assert_eq!(p.mode, PowerMode::Linear);
    }

    /// Mean of `max(pmax - c s, pmin)` for s uniform on [0, S] by midpoint
    /// quadrature.
    fn quadrature_mean(c: f64, s_max: f64) -> f64 {
        let n = 200_000;
        (0..n)
            .map(|i| {
                let s = s_max * (i as f64 + 0.5) / n as f64;
                (1000.0 - c * s).max(500.0)
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn steeper_ramp_spends_the_budget() {
        let s = 0.4;
        let scores = uniform_scores(2000, s);
        // Ramp mean is 750; ask for 650.
        let p = calibrate_power_policy(&scores, 500.0, 1000.0, 650.0, s).unwrap();
        let PowerMode::SteeperClampedLow { c } = p.mode else {
            panic!("{:?}", p.mode);
        };
        assert!(c > p.c1);
        assert!((p.mean_power(&scores) - 650.0).abs() <= 650.0 * 1e-6);
        assert!(p.mean_power(&scores) <= 650.0 * (1.0 + 1e-6));
        assert!((quadrature_mean(c, s) - 650.0).abs() < 0.05);
    }

    #[test]
    fn shallower_ramp_case() {
        let s = 0.4;
        let scores = uniform_scores(2000, s);
        let p = calibrate_power_policy(&scores, 500.0, 1000.0, 850.0, s).unwrap();
        let PowerMode::SteeperClampedHigh { c } = p.mode else {
            panic!("{:?}", p.mode);
        };
        assert!(c > p.c1);
        let m = p.mean_power(&scores);
        assert!(m <= 850.0 * (1.0 + 1e-6) && m > 850.0 * (1.0 - 1e-6), "{m}");
    }

    #[test]
    fn min_only_below_cutoff() {
        // 10 calibration slots, all below S; budget allows 3 bursts at 500.
        let scores: Vec<f64> = (0..10).map(|i| i as f64 * 0.01).collect();
        let p = calibrate_power_policy(&scores, 500.0, 1000.0, 150.0, 0.5).unwrap();
        let PowerMode::MinBelowCutoff { cutoff } = p.mode else {
            panic!("{:?}", p.mode);
        };
        assert!((cutoff - 0.025).abs() < 1e-12);
        assert_eq!(p.mean_power(&scores), 150.0);
        // Zero budget never jams.
        let p = calibrate_power_policy(&scores, 500.0, 1000.0, 0.0, 0.5).unwrap();
        assert_eq!(p.mode, PowerMode::Off);
        assert_eq!(p.mean_power(&scores), 0.0);
    }

    #[test]
    fn bad_power_range_is_config_error() {
        assert!(calibrate_power_policy(&[0.1], 1000.0, 500.0, 100.0, 0.5)
            .unwrap_err()
            .is_config_error());
    }

    proptest! {
        #[test]
        fn policy_invariants(
            raw in prop::collection::vec(0.0f64..1.0, 1..200),
            s_thr in 0.05f64..0.95,
            p_avg_frac in 0.0f64..1.2,
        ) {
            let p_avg = 1000.0 * p_avg_frac;
            let p = calibrate_power_policy(&raw, 500.0, 1000.0, p_avg, s_thr).unwrap();
            prop_assert!(p.mean_power(&raw) <= p_avg * (1.0 + 1e-6) + 1e-9);
            let mut prev = f64::INFINITY;
            let mut s = 0.0;
            while s <= s_thr {
                let w = p.power(s);
                prop_assert!(w == 0.0 || (500.0 - 1e-9..=1000.0 + 1e-9).contains(&w));
                prop_assert!(w <= prev + 1e-9);
                prev = w;
                s += 1e-3;
            }
            prop_assert_eq!(p.power(s_thr + 1e-9), 0.0);
        }
    }
}
