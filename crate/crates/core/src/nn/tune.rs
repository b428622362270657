use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::network::{Activation, MlpNetwork, NetworkSpec};
use super::threshold::{select_threshold, ThresholdChoice};
use super::train::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::rng::{stream, SimRng};

/// One point of the classifier hyperparameter grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub hidden_layers: usize,
    pub width: usize,
    pub activation: Activation,
}

impl HyperParams {
    pub fn spec(&self, input_dim: usize) -> NetworkSpec {
        NetworkSpec::classifier(input_dim, &vec![self.width; self.hidden_layers], self.activation)
    }

    pub fn label(&self) -> String {
        format!(
            "{}x{} {}",
            self.hidden_layers,
            self.width,
            self.activation.name()
        )
    }
}

/// Hidden layers {1, 2} x widths {20, 30, ..., 100} x {sigmoid, tanh}, in
/// that nesting order.
pub fn default_grid() -> Vec<HyperParams> {
    let mut grid = Vec::new();
    for hidden_layers in [1, 2] {
        for width in (20..=100).step_by(10) {
            for activation in [Activation::Sigmoid, Activation::Tanh] {
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

/// Anything the grid search can train and score.
pub trait Candidate {
    fn param_count(&self, input_dim: usize) -> usize;
    fn fit(&self, train: &Dataset, cfg: &TrainConfig, rng: &mut SimRng) -> Result<MlpNetwork>;
}

impl Candidate for HyperParams {
    fn param_count(&self, input_dim: usize) -> usize {
        self.spec(input_dim).param_count()
    }

    fn fit(&self, data: &Dataset, cfg: &TrainConfig, rng: &mut SimRng) -> Result<MlpNetwork> {
        let mut net = MlpNetwork::new(self.spec(data.dim()), rng)?;
        train(&mut net, data, cfg, rng)?;
        Ok(net)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateScore {
    pub index: usize,
    pub param_count: usize,
    pub choice: ThresholdChoice,
}

#[derive(Clone, Debug)]
pub struct TuneOutcome {
    /// Winning network with its decision threshold set.
    pub network: MlpNetwork,
    pub best_index: usize,
    /// Operating point of the winner on the validation split.
    pub choice: ThresholdChoice,
    pub scores: Vec<CandidateScore>,
}

/// Trains every candidate on `train`, picks each one's threshold on
/// `validation`, and returns the candidate with the smallest validation
/// `max(e_md, e_fa)`. Ties go to fewer parameters, then to grid order.
/// Candidate `i` draws from its own sub-stream of `seed`, so the result does
/// not depend on evaluation order.
pub fn tune_hyperparameters<C: Candidate>(
    train_split: &Dataset,
    validation: &Dataset,
    grid: &[C],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TuneOutcome> {
    if grid.is_empty() {
        return Err(Error::config("hyperparameter grid is empty"));
    }
    validation.require_both_labels()?;
    let mut best: Option<(CandidateScore, MlpNetwork)> = None;
    let mut scores = Vec::with_capacity(grid.len());
    for (index, cand) in grid.iter().enumerate() {
        let mut rng = stream(seed, "candidate", index as u64);
        let mut net = cand.fit(train_split, cfg, &mut rng)?;
        let s = net.scores(validation)?;
        let choice = select_threshold(&s, validation.labels())?;
        net.set_threshold(Some(choice.threshold));
        let score = CandidateScore {
            index,
            param_count: cand.param_count(train_split.dim()),
            choice,
        };
        let better = match &best {
            None => true,
            Some((b, _)) => {
                let (m, bm) = (choice.max_error(), b.choice.max_error());
                m < bm || (m == bm && score.param_count < b.param_count)
            }
        };
        if better {
            best = Some((score.clone(), net));
        }
        scores.push(score);
    }
    let (winner, network) = best.expect("grid is non-empty");
    Ok(TuneOutcome {
        network,
        best_index: winner.index,
        choice: winner.choice,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn noisy_dataset(seed: u64, n: usize) -> Dataset {
        let mut rng = stream(seed, "data", 0);
        let mut d = Dataset::new(2);
        for _ in 0..n {
            let pos = rng.random_bool(0.5);
            let c = if pos { -1.0 } else { 1.0 };
            d.push(
                &[c + rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0)],
                pos,
            )
            .unwrap();
        }
        d
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 36);
        assert_eq!(g[0].label(), "1x20 sigmoid");
        assert_eq!(g[35].label(), "2x100 tanh");
    }

    #[test]
    fn single_candidate_is_returned() {
        let grid = [HyperParams {
            hidden_layers: 1,
            width: 5,
            activation: Activation::Tanh,
        }];
        let out = tune_hyperparameters(&noisy_dataset(1, 80), &noisy_dataset(2, 80), &grid, &quick(), 3)
            .unwrap();
        assert_eq!(out.best_index, 0);
        assert!(out.network.threshold().is_some());
    }

    /// Ignores its training data and scores by the sign of the first feature.
    struct Oracle;

    impl Candidate for Oracle {
        fn param_count(&self, _: usize) -> usize {
            1_000_000
        }
        fn fit(&self, data: &Dataset, _: &TrainConfig, _: &mut SimRng) -> Result<MlpNetwork> {
            let mut net = MlpNetwork::zeroed(NetworkSpec::classifier(data.dim(), &[1], Activation::Tanh))?;
            let p = net.params_mut();
            // hidden = tanh(10 x0); logits (0, 10 * hidden)
            p[0] = 10.0;
            p[3 + 1] = 10.0;
            Ok(net)
        }
    }

    enum Mixed {
        Net(HyperParams),
        Oracle,
    }

    impl Candidate for Mixed {
        fn param_count(&self, d: usize) -> usize {
            match self {
                Mixed::Net(h) => h.param_count(d),
                Mixed::Oracle => Oracle.param_count(d),
            }
        }
        fn fit(&self, t: &Dataset, c: &TrainConfig, r: &mut SimRng) -> Result<MlpNetwork> {
            match self {
                Mixed::Net(h) => h.fit(t, c, r),
                Mixed::Oracle => Oracle.fit(t, c, r),
            }
        }
    }

    #[test]
    fn zero_error_candidate_is_selected() {
        // Cleanly separable on the first feature.
        let mut rng = stream(4, "sep", 0);
        let mut make = |n| {
            let mut d = Dataset::new(2);
            for i in 0..n {
                let pos = i % 2 == 0;
                let x0 = if pos { -rng.random_range(0.5..2.0) } else { rng.random_range(0.5..2.0) };
                d.push(&[x0, rng.random_range(-5.0..5.0)], pos).unwrap();
            }
            d
        };
        let (tr, va) = (make(60), make(60));
        let grid = vec![
            Mixed::Net(HyperParams {
                hidden_layers: 1,
                width: 1,
                activation: Activation::Sigmoid,
            }),
            Mixed::Oracle,
        ];
        let cfg = TrainConfig {
            epochs: 1,
            learning_rate: 1e-6,
            ..TrainConfig::default()
        };
        let out = tune_hyperparameters(&tr, &va, &grid, &cfg, 5).unwrap();
        assert_eq!(out.choice.max_error(), 0.0);
        if out.best_index == 0 {
            // The tiny net happened to separate as well; it has fewer params.
            assert_eq!(out.scores[0].choice.max_error(), 0.0);
        } else {
            assert_eq!(out.best_index, 1);
        }
    }

    #[test]
    fn winner_is_the_minimum_of_all_candidates() {
        let grid: Vec<HyperParams> = default_grid().into_iter().step_by(7).collect();
        let out = tune_hyperparameters(&noisy_dataset(6, 100), &noisy_dataset(7, 100), &grid, &quick(), 8)
            .unwrap();
        let best = out.choice.max_error();
        for s in &out.scores {
            assert!(best <= s.choice.max_error());
        }
    }
}
