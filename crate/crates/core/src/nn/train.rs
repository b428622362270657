use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::network::{Activation, MlpNetwork, Mode, Normalizer, OutputKind};
use super::optim::{Optimizer, OptimizerKind};
use crate::error::{Error, Result};

const LOG_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Total epochs per training run.
    pub epochs: usize,
    /// Epochs per training round; the normalizer is fitted once before the
    /// first round and kept afterwards.
    pub epochs_per_round: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            epochs_per_round: 10,
            minibatch_size: 25,
            learning_rate: 0.1,
            momentum: 0.9,
            optimizer: OptimizerKind::MomentumSgd,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.minibatch_size == 0 {
            return Err(Error::config("minibatch_size must be at least 1"));
        }
        if self.epochs_per_round == 0 {
            return Err(Error::config("epochs_per_round must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum must lie in [0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        self.optimizer.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean loss over each epoch's minibatches, measured before each update.
    pub epoch_losses: Vec<f64>,
}

/// Class index used for the softmax target: 0 for positive, 1 for negative.
#[inline]
fn target_class(positive: bool) -> usize {
    usize::from(!positive)
}

/// Mean of the per-sample loss `-sum_k [y_k ln p_k + (1 - y_k) ln(1 - p_k)]`
/// over a batch of two-class softmax outputs, together with its gradient
/// with respect to the logits. For two classes the gradient reduces to
/// `2 (p - y) / n`. With two classes `1 - p_k` is the other output, which
/// is used directly to avoid cancellation when `p_k` is near 1.
pub fn binary_softmax_loss(probs: &[f64], positive: &[bool]) -> (f64, Vec<f64>) {
    let n = positive.len();
    let mut loss = 0.0;
    let mut grad = vec![0.0; probs.len()];
    for (i, &pos) in positive.iter().enumerate() {
        let c = target_class(pos);
        let p = &probs[2 * i..2 * i + 2];
        for k in 0..2 {
            let y = if k == c { 1.0 } else { 0.0 };
            loss -= y * p[k].max(LOG_FLOOR).ln() + (1.0 - y) * p[1 - k].max(LOG_FLOOR).ln();
            grad[2 * i + k] = 2.0 * (p[k] - y) / n as f64;
        }
    }
    (loss / n as f64, grad)
}

fn check_classifier(net: &MlpNetwork, data: &Dataset) -> Result<()> {
    if net.spec().output != OutputKind::Softmax || net.output_dim() != 2 {
        return Err(Error::config("classifier training needs a two-unit softmax output"));
    }
    if data.dim() != net.input_dim() {
        return Err(Error::Shape {
            expected: net.input_dim(),
            got: data.dim(),
        });
    }
    Ok(())
}

/// Trains a two-class classifier with minibatch gradient descent.
pub fn train<R: Rng + ?Sized>(
    net: &mut MlpNetwork,
    data: &Dataset,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<TrainReport> {
    cfg.validate()?;
    check_classifier(net, data)?;
    data.require_both_labels()?;
    if net.normalizer().is_none() {
        net.set_normalizer(Some(Normalizer::fit(data)?))?;
    }
    let dim = data.dim();
    let x = net.normalize_batch(data.features());
    let labels = data.labels();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.momentum, net.param_count());
    let mut grads = vec![0.0; net.param_count()];
    let mut batch_x = Vec::with_capacity(cfg.minibatch_size * dim);
    let mut batch_y = Vec::with_capacity(cfg.minibatch_size);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    let mut remaining = cfg.epochs;
    while remaining > 0 {
        let round = remaining.min(cfg.epochs_per_round);
        for _ in 0..round {
            order.shuffle(rng);
            let mut total = 0.0;
            for chunk in order.chunks(cfg.minibatch_size) {
                batch_x.clear();
                batch_y.clear();
                for &i in chunk {
                    batch_x.extend_from_slice(&x[i * dim..(i + 1) * dim]);
                    batch_y.push(labels[i]);
                }
                let trace = net.run(&batch_x, chunk.len(), Mode::Train);
                let (loss, grad_logits) = binary_softmax_loss(&trace.out, &batch_y);
                total += loss * chunk.len() as f64;
                grads.fill(0.0);
                net.backprop(&trace, &grad_logits, &mut grads, false);
                net.absorb_batch_stats(&trace);
                opt.step(net.params_mut(), &grads);
            }
            epoch_losses.push(total / data.len() as f64);
        }
        remaining -= round;
    }
    Ok(TrainReport { epoch_losses })
}

/// Mean classification loss of a batch in training mode, with the hidden
/// sign pattern of the forward pass.
fn batch_loss(net: &MlpNetwork, x: &[f64], labels: &[bool]) -> (f64, Vec<bool>) {
    let trace = net.run(x, labels.len(), Mode::Train);
    (binary_softmax_loss(&trace.out, labels).0, trace.hidden_signs())
}

/// Compares backprop gradients of the classification loss on `batch` with
/// central finite differences (step 1e-5) and returns the largest relative
/// error over all parameters. Gradients smaller than 1e-5 in magnitude are
/// compared on an absolute scale of 1e-5. For leaky-ReLU networks, a
/// parameter whose perturbation moves any unit across the kink is skipped,
/// since the loss has no derivative there.
pub fn gradient_check(net: &MlpNetwork, batch: &Dataset) -> Result<f64> {
    check_classifier(net, batch)?;
    if batch.is_empty() {
        return Err(Error::DegenerateDataset("empty batch".into()));
    }
    const EPS: f64 = 1e-5;
    const FLOOR: f64 = 1e-5;
    let x = net.normalize_batch(batch.features());
    let labels = batch.labels();
    let trace = net.run(&x, labels.len(), Mode::Train);
    let (_, grad_logits) = binary_softmax_loss(&trace.out, labels);
    let mut analytic = vec![0.0; net.param_count()];
    net.backprop(&trace, &grad_logits, &mut analytic, false);

    let leaky = net
        .spec()
        .activations
        .iter()
        .any(|a| matches!(a, Activation::LeakyRelu(_)));
    let base_signs = trace.hidden_signs();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + EPS;
        let (up, up_signs) = batch_loss(&probe, &x, labels);
        probe.params_mut()[i] = orig - EPS;
        let (down, down_signs) = batch_loss(&probe, &x, labels);
        probe.params_mut()[i] = orig;
        if leaky && (up_signs != base_signs || down_signs != base_signs) {
            continue;
        }
        let numeric = (up - down) / (2.0 * EPS);
        let denom = a.abs().max(numeric.abs()).max(FLOOR);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::network::{init_network, Activation, NetworkSpec};
    use crate::rng::stream;

    fn random_batch(seed: u64, dim: usize, n: usize) -> Dataset {
        let mut rng = stream(seed, "batch", 0);
        let mut d = Dataset::new(dim);
        for i in 0..n {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            d.push(&x, i % 3 != 0).unwrap();
        }
        d
    }

    #[test]
    fn eq_loss_is_twice_cross_entropy() {
        let probs = [0.8, 0.2, 0.3, 0.7];
        let (loss, grad) = binary_softmax_loss(&probs, &[true, false]);
        let ce = -(0.8f64.ln() + 0.7f64.ln()) / 2.0;
        assert!((loss - 2.0 * ce).abs() < 1e-12);
        assert!((grad[0] - 2.0 * (0.8 - 1.0) / 2.0).abs() < 1e-15);
        assert!((grad[3] - 2.0 * (0.7 - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_check_sigmoid_net() {
        let mut rng = stream(2, "init", 0);
        let net = init_network(&[10, 20, 2], Activation::Sigmoid, &mut rng).unwrap();
        let err = gradient_check(&net, &random_batch(3, 10, 25)).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradient_check_zero_net() {
        let net = MlpNetwork::zeroed(NetworkSpec::classifier(4, &[5], Activation::Tanh)).unwrap();
        let err = gradient_check(&net, &random_batch(4, 4, 10)).unwrap();
        assert!(err.is_finite() && err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradient_check_with_batch_norm() {
        let mut spec = NetworkSpec::classifier(6, &[8, 7], Activation::Tanh);
        spec.batch_norm = vec![true, true];
        let net = MlpNetwork::new(spec, &mut stream(5, "init", 0)).unwrap();
        let err = gradient_check(&net, &random_batch(6, 6, 12)).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn xor_is_learned() {
        let data = Dataset::from_rows(
            2,
            &[
                (vec![0.0, 0.0], true),
                (vec![0.0, 1.0], false),
                (vec![1.0, 0.0], false),
                (vec![1.0, 1.0], true),
            ],
        )
        .unwrap();
        let mut rng = stream(7, "xor", 0);
        let mut net = init_network(&[2, 8, 2], Activation::Tanh, &mut rng).unwrap();
        let cfg = TrainConfig {
            epochs: 2000,
            minibatch_size: 4,
            ..TrainConfig::default()
        };
        train(&mut net, &data, &cfg, &mut rng).unwrap();
        let scores = net.scores(&data).unwrap();
        for (s, &pos) in scores.iter().zip(data.labels()) {
            assert_eq!(*s < 0.5, pos, "score {s}");
        }
    }

    #[test]
    fn loss_decreases_on_separable_data() {
        let rows: Vec<(Vec<f64>, bool)> =
            (0..40).map(|i| (vec![i as f64], i < 20)).collect();
        let data = Dataset::from_rows(1, &rows).unwrap();
        let mut rng = stream(8, "sep", 0);
        let mut net = init_network(&[1, 5, 2], Activation::Sigmoid, &mut rng).unwrap();
        let report = train(&mut net, &data, &TrainConfig::default(), &mut rng).unwrap();
        assert_eq!(report.epoch_losses.len(), 200);
        assert!(report.epoch_losses.last().unwrap() < report.epoch_losses.first().unwrap());
    }

    #[test]
    fn normalizer_fitted_once() {
        let data = random_batch(9, 3, 30);
        let mut rng = stream(9, "n", 0);
        let mut net = init_network(&[3, 4, 2], Activation::Tanh, &mut rng).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        train(&mut net, &data, &cfg, &mut rng).unwrap();
        let first = net.normalizer().cloned();
        let other = random_batch(10, 3, 30);
        train(&mut net, &other, &cfg, &mut rng).unwrap();
        assert_eq!(net.normalizer().cloned(), first);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = Dataset::from_rows(1, &[(vec![0.0], true), (vec![1.0], true)]).unwrap();
        let mut rng = stream(1, "x", 0);
        let mut net = init_network(&[1, 2, 2], Activation::Tanh, &mut rng).unwrap();
        assert!(matches!(
            train(&mut net, &data, &TrainConfig::default(), &mut rng),
            Err(Error::DegenerateDataset(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let data = random_batch(11, 4, 50);
        let run = || {
            let mut rng = stream(12, "t", 0);
            let mut net = init_network(&[4, 6, 2], Activation::Sigmoid, &mut rng).unwrap();
            train(&mut net, &data, &TrainConfig::default(), &mut rng).unwrap();
            net
        };
        assert_eq!(run(), run());
    }
}
