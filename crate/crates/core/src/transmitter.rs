//! The cognitive transmitter: sensing-window features, its idle/busy
//! classifier, and the label-flipping defense with its adaptive search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::env::{SlotDraw, World};
use crate::error::{Error, Result};
use crate::nn::{Dataset, MlpNetwork};

/// The `K` most recent sensing readings, oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingWindow(pub Vec<f64>);

impl SensingWindow {
    pub fn readings(&self) -> &[f64] {
        &self.0
    }

    /// Classifier input: the readings in dB. With unit noise power an idle
    /// reading sits near 0 dB, and the heavy lognormal tail of received
    /// signals is compressed onto a scale the input normalizer handles.
    pub fn features(&self) -> Vec<f64> {
        self.0.iter().map(|&r| rssi_db(r)).collect()
    }
}

/// `10 log10(reading)`. Non-positive readings, which the channel never
/// produces, map to a large finite negative value rather than -inf.
pub fn rssi_db(reading: f64) -> f64 {
    10.0 * reading.max(1e-30).log10()
}

/// Window of the last `k` readings of `history`.
pub fn make_features(history: &[f64], k: usize) -> Result<SensingWindow> {
    if k == 0 {
        return Err(Error::config("window length must be at least 1"));
    }
    if history.len() < k {
        return Err(Error::WarmUp {
            needed: k,
            have: history.len(),
        });
    }
    Ok(SensingWindow(history[history.len() - k..].to_vec()))
}

/// Rolling buffer of sensing readings.
#[derive(Clone, Debug)]
pub struct SensingHistory {
    k: usize,
    buf: VecDeque<f64>,
}

impl SensingHistory {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("window length must be at least 1"));
        }
        Ok(SensingHistory {
            k,
            buf: VecDeque::with_capacity(k),
        })
    }

    pub fn push(&mut self, reading: f64) {
        if self.buf.len() == self.k {
            self.buf.pop_front();
        }
        self.buf.push_back(reading);
    }

    pub fn is_ready(&self) -> bool {
        self.buf.len() == self.k
    }

    pub fn window(&self) -> Result<SensingWindow> {
        if !self.is_ready() {
            return Err(Error::WarmUp {
                needed: self.k,
                have: self.buf.len(),
            });
        }
        Ok(SensingWindow(self.buf.iter().copied().collect()))
    }
}

/// Runs the world for `n_slots` and labels each of T's sensing windows
/// idle (positive) or busy. The first `k - 1` slots only fill the window.
pub fn collect_training_data(world: &mut World, n_slots: usize, k: usize) -> Result<Dataset> {
    let mut history = SensingHistory::new(k)?;
    let mut data = Dataset::new(k);
    for _ in 0..n_slots {
        let draw = world.step();
        history.push(draw.rssi_t);
        if let Ok(w) = history.window() {
            data.push(&w.features(), !draw.busy)?;
        }
    }
    Ok(data)
}

/// Transmit iff the classifier labels the window idle (score <= threshold).
pub fn decide_transmit(classifier: &MlpNetwork, window: &SensingWindow) -> Result<(bool, f64)> {
    classifier.decide(&window.features())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefenseConfig {
    /// Fraction of slots per window on which T acts against its classifier.
    pub p_d: f64,
    /// Slots per flip-selection batch.
    pub window: usize,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        DefenseConfig {
            p_d: 0.0,
            window: 500,
        }
    }
}

impl DefenseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_d) {
            return Err(Error::config("p_d must lie in [0, 1]"));
        }
        if self.window == 0 {
            return Err(Error::config("defense window must be at least 1 slot"));
        }
        Ok(())
    }
}

/// How far a score sits from the threshold, scaled to [0, 1] on each side.
pub fn confidence(score: f64, threshold: f64) -> f64 {
    if score <= threshold {
        if threshold > 0.0 {
            (threshold - score) / threshold
        } else {
            1.0
        }
    } else if threshold < 1.0 {
        (score - threshold) / (1.0 - threshold)
    } else {
        1.0
    }
}

/// Indices of the `ceil(p_d * n)` most confident scores, ties broken toward
/// earlier slots, returned in ascending order.
pub fn select_flip_slots(scores: &[f64], threshold: f64, p_d: f64) -> Vec<usize> {
    let count = ((p_d * scores.len() as f64).ceil() as usize).min(scores.len());
    if count == 0 {
        return Vec::new();
    }
    let conf: Vec<f64> = scores.iter().map(|&s| confidence(s, threshold)).collect();
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| conf[b].total_cmp(&conf[a]).then(a.cmp(&b)));
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// T's decision for one slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TxDecision {
    /// False while the sensing window is still filling; T stays silent.
    pub ready: bool,
    pub score: f64,
    pub transmit: bool,
    pub flipped: bool,
}

/// The operating transmitter with its trained classifier and defense.
#[derive(Clone, Debug)]
pub struct Transmitter {
    classifier: MlpNetwork,
    defense: DefenseConfig,
    history: SensingHistory,
}

impl Transmitter {
    pub fn new(classifier: MlpNetwork, k: usize, defense: DefenseConfig) -> Result<Self> {
        defense.validate()?;
        if classifier.threshold().is_none() {
            return Err(Error::Untrained);
        }
        if classifier.input_dim() != k {
            return Err(Error::Shape {
                expected: k,
                got: classifier.input_dim(),
            });
        }
        Ok(Transmitter {
            classifier,
            defense,
            history: SensingHistory::new(k)?,
        })
    }

    pub fn classifier(&self) -> &MlpNetwork {
        &self.classifier
    }

    pub fn defense(&self) -> DefenseConfig {
        self.defense
    }

    pub fn set_defense(&mut self, defense: DefenseConfig) -> Result<()> {
        defense.validate()?;
        self.defense = defense;
        Ok(())
    }

    /// Decides a batch of consecutive slots. T's scores depend only on its
    /// own sensing, so the flip set of a batch can be chosen from the whole
    /// batch's scores. Callers pass at most one defense window at a time.
    pub fn plan(&mut self, draws: &[SlotDraw]) -> Result<Vec<TxDecision>> {
        let threshold = self.classifier.threshold().ok_or(Error::Untrained)?;
        let mut decisions = Vec::with_capacity(draws.len());
        for d in draws {
            self.history.push(d.rssi_t);
            match self.history.window() {
                Ok(w) => {
                    let (transmit, score) = decide_transmit(&self.classifier, &w)?;
                    decisions.push(TxDecision {
                        ready: true,
                        score,
                        transmit,
                        flipped: false,
                    });
                }
                Err(_) => decisions.push(TxDecision {
                    ready: false,
                    score: f64::NAN,
                    transmit: false,
                    flipped: false,
                }),
            }
        }
        if self.defense.p_d > 0.0 {
            let ready: Vec<usize> = (0..decisions.len()).filter(|&i| decisions[i].ready).collect();
            let scores: Vec<f64> = ready.iter().map(|&i| decisions[i].score).collect();
            for j in select_flip_slots(&scores, threshold, self.defense.p_d) {
                let d = &mut decisions[ready[j]];
                d.flipped = true;
                d.transmit = !d.transmit;
            }
        }
        Ok(decisions)
    }
}

/// Coarse-to-fine search for the defense level that maximizes throughput.
///
/// Evaluates p_d = 0, 0.1, ..., 1 in order, then probes the incumbent's
/// neighbors at step 0.05 and, if one of them improved, at step 0.025.
/// The search stops when a probe round brings no improvement or after the
/// finest step; afterwards it keeps returning the incumbent.
#[derive(Clone, Debug)]
pub struct AdaptiveDefense {
    coarse_next: usize,
    incumbent: f64,
    best: f64,
    steps: Vec<f64>,
    level: usize,
    pending: VecDeque<f64>,
    round_improved: Option<(f64, f64)>,
    current: f64,
    converged: bool,
    iterations: usize,
}

const COARSE_POINTS: usize = 11;

impl Default for AdaptiveDefense {
    fn default() -> Self {
        Self::new()
    }
}

impl AdaptiveDefense {
    pub fn new() -> Self {
        AdaptiveDefense {
            coarse_next: 1,
            incumbent: 0.0,
            best: f64::NEG_INFINITY,
            steps: vec![0.05, 0.025],
            level: 0,
            pending: VecDeque::new(),
            round_improved: None,
            current: 0.0,
            converged: false,
            iterations: 0,
        }
    }

    /// Defense level to run next.
    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn incumbent(&self) -> f64 {
        self.incumbent
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    /// Number of throughput measurements consumed by the search.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn queue_neighbors(&mut self) {
        let step = self.steps[self.level];
        self.pending.clear();
        for p in [self.incumbent - step, self.incumbent + step] {
            if (-1e-12..=1.0 + 1e-12).contains(&p) {
                self.pending.push_back(p.clamp(0.0, 1.0));
            }
        }
        self.round_improved = None;
    }

    fn finish(&mut self) {
        self.converged = true;
        self.current = self.incumbent;
    }

    fn advance_probe(&mut self) {
        if let Some(p) = self.pending.pop_front() {
            self.current = p;
            return;
        }
        // Probe round over.
        match self.round_improved.take() {
            Some((p, t)) => {
                self.incumbent = p;
                self.best = t;
                self.level += 1;
                if self.level == self.steps.len() {
                    self.finish();
                } else {
                    self.queue_neighbors();
                    self.advance_probe();
                }
            }
            None => self.finish(),
        }
    }

    /// Reports the throughput measured at [`current`](Self::current) and
    /// returns the next level to run.
    pub fn observe(&mut self, throughput: f64) -> f64 {
        if self.converged {
            return self.current;
        }
        self.iterations += 1;
        if self.coarse_next <= COARSE_POINTS {
            if throughput > self.best {
                self.best = throughput;
                self.incumbent = self.current;
            }
            if self.coarse_next < COARSE_POINTS {
                self.current = self.coarse_next as f64 / 10.0;
                self.coarse_next += 1;
                return self.current;
            }
            self.coarse_next += 1;
            self.queue_neighbors();
            self.advance_probe();
            return self.current;
        }
        let beats = match self.round_improved {
            Some((_, t)) => throughput > t,
            None => throughput > self.best,
        };
        if beats {
            self.round_improved = Some((self.current, throughput));
        }
        self.advance_probe();
        self.current
    }
}

/// Runs the adaptive search against a throughput function until it
/// converges; returns the chosen level and the number of evaluations.
pub fn adapt_defense_level<F: FnMut(f64) -> f64>(mut throughput_at: F) -> (f64, usize) {
    let mut search = AdaptiveDefense::new();
    while !search.is_converged() {
        let t = throughput_at(search.current());
        search.observe(t);
    }
    (search.incumbent(), search.iterations())
}
