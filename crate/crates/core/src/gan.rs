//! Conditional GAN that produces labeled synthetic sensing windows.
//!
//! Both networks see the label as a one-hot pair appended to their input.
//! Training works in the normalized feature space of the real samples;
//! generated windows are mapped back to feature units (dB) and clamped at
//! zero, the level of a noise-only reading.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    Activation, Dataset, Init, MlpNetwork, Mode, NetworkSpec, Normalizer, Optimizer,
    OptimizerKind, OutputKind,
};

/// Probabilities are floored here before taking logs in reported losses.
const LOG_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CGanConfig {
    pub noise_dim: usize,
    pub hidden: (usize, usize),
    pub leaky_slope: f64,
    pub epochs: usize,
    /// Minibatch size; `None` means `min(10, number of real samples)`.
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Standard deviation of Gaussian noise added to every discriminator
    /// input, in normalized feature units. Without it the discriminator
    /// memorizes a handful of real samples and starves the generator.
    pub instance_noise: f64,
}

impl Default for CGanConfig {
    fn default() -> Self {
        CGanConfig {
            noise_dim: 16,
            hidden: (128, 128),
            leaky_slope: 0.2,
            epochs: 3500,
            batch_size: None,
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
            instance_noise: 1.0,
        }
    }
}

impl CGanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("GAN epochs must be at least 1"));
        }
        if self.noise_dim == 0 || self.hidden.0 == 0 || self.hidden.1 == 0 {
            return Err(Error::config("GAN layer sizes must be at least 1"));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::config("leaky slope must lie in (0, 1)"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::config("GAN batch size must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("GAN learning rate must be positive"));
        }
        if !(self.instance_noise >= 0.0 && self.instance_noise.is_finite()) {
            return Err(Error::config("GAN instance noise must be finite and non-negative"));
        }
        self.optimizer().validate()
    }

    fn optimizer(&self) -> OptimizerKind {
        OptimizerKind::Adam {
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Mean losses of one training epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSample {
    pub features: Vec<f64>,
    pub positive: bool,
    pub synthetic: bool,
}

/// A trained generator/discriminator pair.
#[derive(Clone, Debug)]
pub struct CGan {
    pub generator: MlpNetwork,
    pub discriminator: MlpNetwork,
    normalizer: Normalizer,
    noise_dim: usize,
}

fn one_hot(positive: bool) -> [f64; 2] {
    if positive {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    }
}

fn hidden_spec(cfg: &CGanConfig, input: usize, output: usize, out_kind: OutputKind) -> NetworkSpec {
    NetworkSpec {
        layer_sizes: vec![input, cfg.hidden.0, cfg.hidden.1, output],
        activations: vec![Activation::LeakyRelu(cfg.leaky_slope); 2],
        batch_norm: vec![true, true],
        output: out_kind,
        init: Init::Glorot,
    }
}

/// Rows of `[a_row ++ one_hot(label)]`.
fn with_labels(a: &[f64], width: usize, labels: &[bool]) -> Vec<f64> {
    let mut out = Vec::with_capacity(labels.len() * (width + 2));
    for (row, &l) in a.chunks_exact(width).zip(labels) {
        out.extend_from_slice(row);
        out.extend_from_slice(&one_hot(l));
    }
    out
}

/// Cross-entropy of the discriminator's "real" output (unit 1) against a
/// fixed target, with its gradient on the logits.
fn d_loss(probs: &[f64], target_real: bool) -> (f64, Vec<f64>) {
    let n = probs.len() / 2;
    let c = usize::from(target_real);
    let mut loss = 0.0;
    let mut grad = vec![0.0; probs.len()];
    for i in 0..n {
        loss -= probs[2 * i + c].max(LOG_FLOOR).ln();
        for k in 0..2 {
            let y = if k == c { 1.0 } else { 0.0 };
            grad[2 * i + k] = (probs[2 * i + k] - y) / n as f64;
        }
    }
    (loss / n as f64, grad)
}

/// `v` plus independent Gaussian noise of standard deviation `sigma`.
fn jitter<R: Rng + ?Sized>(v: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return v.to_vec();
    }
    v.iter()
        .map(|x| x + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn noise<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize) -> Vec<f64> {
    (0..n * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Trains a conditional GAN on `real` and returns it with the per-epoch
/// loss trace.
pub fn train_cgan<R: Rng + ?Sized>(
    real: &Dataset,
    cfg: &CGanConfig,
    rng: &mut R,
) -> Result<(CGan, Vec<LossPoint>)> {
    cfg.validate()?;
    real.require_both_labels()?;
    let dim = real.dim();
    let normalizer = Normalizer::fit(real)?;
    let mut g = MlpNetwork::new(hidden_spec(cfg, cfg.noise_dim + 2, dim, OutputKind::Linear), rng)?;
    let mut d = MlpNetwork::new(hidden_spec(cfg, dim + 2, 2, OutputKind::Softmax), rng)?;
    let mut g_opt = Optimizer::new(cfg.optimizer(), cfg.learning_rate, 0.0, g.param_count());
    let mut d_opt = Optimizer::new(cfg.optimizer(), cfg.learning_rate, 0.0, d.param_count());
    let mut g_grads = vec![0.0; g.param_count()];
    let mut d_grads = vec![0.0; d.param_count()];

    let mut xn = vec![0.0; real.features().len()];
    for (src, dst) in real.features().chunks_exact(dim).zip(xn.chunks_exact_mut(dim)) {
        normalizer.apply_into(src, dst);
    }
    let labels = real.labels();
    let batch = cfg.batch_size.unwrap_or(10).min(real.len()).max(1);
    let mut order: Vec<usize> = (0..real.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let (mut d_sum, mut g_sum, mut steps) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(batch) {
            let n = chunk.len();
            let ys: Vec<bool> = chunk.iter().map(|&i| labels[i]).collect();
            let xr: Vec<f64> = chunk
                .iter()
                .flat_map(|&i| xn[i * dim..(i + 1) * dim].iter().copied())
                .collect();

            // Discriminator: real and generated batches separately.
            let z = noise(rng, n, cfg.noise_dim);
            let g_in = with_labels(&z, cfg.noise_dim, &ys);
            let g_trace = g.run(&g_in, n, Mode::Train);
            g.absorb_batch_stats(&g_trace);
            let fake = g_trace.out.clone();

            // Real and generated rows share one batch, so batch norm in D
            // cannot remove a shift or rescaling of the generated batch.
            let xr = jitter(&xr, cfg.instance_noise, rng);
            let mut d_in = with_labels(&xr, dim, &ys);
            d_in.extend(with_labels(&jitter(&fake, cfg.instance_noise, rng), dim, &ys));
            d_grads.fill(0.0);
            let d_trace = d.run(&d_in, 2 * n, Mode::Train);
            let (l_real, gr) = d_loss(&d_trace.out[..2 * n], true);
            let (l_fake, gf) = d_loss(&d_trace.out[2 * n..], false);
            let grad: Vec<f64> = gr.into_iter().chain(gf).collect();
            d.backprop(&d_trace, &grad, &mut d_grads, false);
            d.absorb_batch_stats(&d_trace);
            d_opt.step(d.params_mut(), &d_grads);

            // Generator: non-saturating loss -log D(G(z, y), y), evaluated
            // in a batch alongside the same real rows.
            let z = noise(rng, n, cfg.noise_dim);
            let g_in = with_labels(&z, cfg.noise_dim, &ys);
            let g_trace = g.run(&g_in, n, Mode::Train);
            g.absorb_batch_stats(&g_trace);
            // Additive noise passes the gradient through unchanged.
            let mut d_in = with_labels(&xr, dim, &ys);
            d_in.extend(with_labels(&jitter(&g_trace.out, cfg.instance_noise, rng), dim, &ys));
            let d_trace = d.run(&d_in, 2 * n, Mode::Train);
            let (l_g, gd) = d_loss(&d_trace.out[2 * n..], true);
            let grad: Vec<f64> = vec![0.0; 2 * n].into_iter().chain(gd).collect();
            d_grads.fill(0.0);
            let d_input = d
                .backprop(&d_trace, &grad, &mut d_grads, true)
                .expect("input gradient requested");
            let grad_fake: Vec<f64> = d_input[n * (dim + 2)..]
                .chunks_exact(dim + 2)
                .flat_map(|r| r[..dim].iter().copied())
                .collect();
            g_grads.fill(0.0);
            g.backprop(&g_trace, &grad_fake, &mut g_grads, false);
            g_opt.step(g.params_mut(), &g_grads);

            d_sum += l_real + l_fake;
            g_sum += l_g;
            steps += 1;
        }
        trace.push(LossPoint {
            epoch,
            d_loss: d_sum / steps as f64,
            g_loss: g_sum / steps as f64,
        });
    }
    Ok((
        CGan {
            generator: g,
            discriminator: d,
            normalizer,
            noise_dim: cfg.noise_dim,
        },
        trace,
    ))
}

impl CGan {
    pub fn feature_dim(&self) -> usize {
        self.generator.output_dim()
    }

    /// Probability the discriminator assigns to "real" for a raw window.
    pub fn discriminate(&self, features: &[f64], positive: bool) -> Result<f64> {
        if features.len() != self.feature_dim() {
            return Err(Error::Shape {
                expected: self.feature_dim(),
                got: features.len(),
            });
        }
        let mut x = vec![0.0; features.len()];
        self.normalizer.apply_into(features, &mut x);
        x.extend_from_slice(&one_hot(positive));
        Ok(self.discriminator.output(&x)?[1])
    }
}

/// Draws `n` synthetic windows with the given label.
pub fn generate_synthetic<R: Rng + ?Sized>(
    gan: &CGan,
    positive: bool,
    n: usize,
    rng: &mut R,
) -> Vec<SyntheticSample> {
    if n == 0 {
        return Vec::new();
    }
    let dim = gan.feature_dim();
    let z = noise(rng, n, gan.noise_dim);
    let input = with_labels(&z, gan.noise_dim, &vec![positive; n]);
    let out = gan.generator.run(&input, n, Mode::Infer).out;
    out.chunks_exact(dim)
        .map(|row| {
            let mut features = vec![0.0; dim];
            gan.normalizer.invert_into(row, &mut features);
            features.iter_mut().for_each(|v| *v = v.max(0.0));
            SyntheticSample {
                features,
                positive,
                synthetic: true,
            }
        })
        .collect()
}

/// Draws `n` synthetic windows split between the labels in the proportion
/// of positives in `real` (rounded to the nearest count).
pub fn generate_proportional<R: Rng + ?Sized>(
    gan: &CGan,
    real: &Dataset,
    n: usize,
    rng: &mut R,
) -> Vec<SyntheticSample> {
    let frac = real.count_positive() as f64 / real.len().max(1) as f64;
    let n_pos = (frac * n as f64).round() as usize;
    let mut out = generate_synthetic(gan, true, n_pos, rng);
    out.extend(generate_synthetic(gan, false, n - n_pos, rng));
    out
}

/// Real samples followed by the synthetic ones.
pub fn augment_dataset(real: &Dataset, synthetic: &[SyntheticSample]) -> Result<Dataset> {
    let mut out = real.clone();
    for s in synthetic {
        out.push(&s.features, s.positive)?;
    }
    Ok(out)
}

/// CSV with columns `epoch,d_loss,g_loss`.
pub fn write_loss_trace<W: Write>(trace: &[LossPoint], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if trace.is_empty() {
        w.write_record(["epoch", "d_loss", "g_loss"])?;
    }
    for p in trace {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn toy(seed: u64, n: usize) -> Dataset {
        let mut rng = stream(seed, "toy", 0);
        let mut d = Dataset::new(1);
        for i in 0..n {
            let pos = i % 2 == 0;
            let z: f64 = rng.sample(StandardNormal);
            let x = if pos { 2.0 + 0.5 * z } else { 6.0 + 1.0 * z };
            d.push(&[x], pos).unwrap();
        }
        d
    }

    fn moments(v: &[f64]) -> (f64, f64) {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
        (m, var.sqrt())
    }

    #[test]
    fn toy_moments_are_matched() {
        let real = toy(1, 200);
        let cfg = CGanConfig {
            epochs: 1000,
            hidden: (32, 32),
            noise_dim: 4,
            ..CGanConfig::default()
        };
        let mut rng = stream(2, "gan", 0);
        let (gan, trace) = train_cgan(&real, &cfg, &mut rng).unwrap();
        assert_eq!(trace.len(), cfg.epochs);
        assert!(trace.iter().all(|p| p.d_loss.is_finite() && p.g_loss.is_finite()));
        for (pos, mean, sd) in [(true, 2.0, 0.5), (false, 6.0, 1.0)] {
            let xs: Vec<f64> = generate_synthetic(&gan, pos, 2000, &mut rng)
                .iter()
                .map(|s| s.features[0])
                .collect();
            let (m, s) = moments(&xs);
            assert!((m - mean).abs() <= 0.2 * mean, "label {pos}: mean {m}");
            assert!((s - sd).abs() <= 0.2 * sd, "label {pos}: sd {s}");
        }
    }

    #[test]
    fn generation_contract() {
        let real = toy(3, 10);
        let cfg = CGanConfig {
            epochs: 5,
            ..CGanConfig::default()
        };
        let mut rng = stream(4, "gan", 0);
        let (gan, _) = train_cgan(&real, &cfg, &mut rng).unwrap();
        assert!(generate_synthetic(&gan, true, 0, &mut rng).is_empty());
        let s = generate_synthetic(&gan, false, 500, &mut rng);
        assert_eq!(s.len(), 500);
        assert!(s.iter().all(|x| x.features.len() == 1 && x.features[0] >= 0.0 && !x.positive));
        let p = gan.discriminate(&[3.0], true).unwrap();
        assert!(p > 0.0 && p < 1.0);

        let aug = augment_dataset(&real, &generate_proportional(&gan, &real, 500, &mut rng)).unwrap();
        assert_eq!(aug.len(), 510);
        let synth_pos = aug.count_positive() - real.count_positive();
        assert!((synth_pos as f64 / 500.0 - 0.5).abs() <= 1.0 / 500.0);
        assert_eq!(augment_dataset(&real, &[]).unwrap(), real);
    }

    #[test]
    fn single_label_is_rejected() {
        let d = Dataset::from_rows(1, &[(vec![1.0], true), (vec![2.0], true)]).unwrap();
        assert!(train_cgan(&d, &CGanConfig::default(), &mut stream(1, "g", 0)).is_err());
    }

    #[test]
    fn pipeline_is_deterministic() {
        let real = toy(5, 10);
        let cfg = CGanConfig {
            epochs: 20,
            ..CGanConfig::default()
        };
        let run = || {
            let mut rng = stream(6, "gan", 0);
            let (gan, trace) = train_cgan(&real, &cfg, &mut rng).unwrap();
            (generate_synthetic(&gan, true, 20, &mut rng), trace)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn loss_trace_csv() {
        let mut buf = Vec::new();
        write_loss_trace(
            &[LossPoint {
                epoch: 0,
                d_loss: 1.5,
                g_loss: 0.25,
            }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,d_loss,g_loss\n0,1.5,0.25\n");
    }
}
