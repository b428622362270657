use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    /// Leaky rectifier with the given negative-side slope.
    LeakyRelu(f64),
}

impl Activation {
    #[inline]
    fn apply(self, u: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-u).exp()),
            Activation::Tanh => u.tanh(),
            Activation::LeakyRelu(a) => {
                if u > 0.0 {
                    u
                } else {
                    a * u
                }
            }
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::LeakyRelu(s) => {
                if a > 0.0 {
                    1.0
                } else {
                    s
                }
            }
        }
    }

    pub fn name(self) -> String {
        match self {
            Activation::Sigmoid => "sigmoid".into(),
            Activation::Tanh => "tanh".into(),
            Activation::LeakyRelu(a) => format!("leaky-relu:{a:?}"),
        }
    }

    pub fn parse(s: &str) -> Option<Activation> {
        match s {
            "sigmoid" => Some(Activation::Sigmoid),
            "tanh" => Some(Activation::Tanh),
            _ => {
                let slope: f64 = s.strip_prefix("leaky-relu:")?.parse().ok()?;
                (slope.is_finite() && slope > 0.0 && slope < 1.0)
                    .then_some(Activation::LeakyRelu(slope))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    /// Softmax over the output units; classifiers use two.
    Softmax,
    /// Identity output, used by the GAN generator.
    Linear,
}

/// How initial weights are drawn. Biases always start in `[-1, 1]` scaled the
/// same way as the weights of their layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Every weight and bias uniform in `[-limit, limit]`.
    Uniform(f64),
    /// Uniform with limit `sqrt(6 / (fan_in + fan_out))`.
    Glorot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    /// Input width, hidden widths..., output width.
    pub layer_sizes: Vec<usize>,
    /// One per hidden layer.
    pub activations: Vec<Activation>,
    /// One per hidden layer.
    pub batch_norm: Vec<bool>,
    pub output: OutputKind,
    pub init: Init,
}

impl NetworkSpec {
    /// Two-class softmax classifier without batch norm.
    pub fn classifier(input: usize, hidden: &[usize], activation: Activation) -> Self {
        let mut layer_sizes = vec![input];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(2);
        NetworkSpec {
            layer_sizes,
            activations: vec![activation; hidden.len()],
            batch_norm: vec![false; hidden.len()],
            output: OutputKind::Softmax,
            init: Init::Uniform(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.layer_sizes.len();
        if n < 3 {
            return Err(Error::config("a network needs at least one hidden layer"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::config("layer widths must be at least 1"));
        }
        if self.activations.len() != n - 2 || self.batch_norm.len() != n - 2 {
            return Err(Error::config(
                "need one activation and one batch-norm flag per hidden layer",
            ));
        }
        if self.output == OutputKind::Softmax && self.layer_sizes[n - 1] < 2 {
            return Err(Error::config("softmax output needs at least two units"));
        }
        match self.init {
            Init::Uniform(l) if !(l.is_finite() && l >= 0.0) => {
                Err(Error::config("init limit must be non-negative"))
            }
            _ => Ok(()),
        }
    }

    pub fn param_count(&self) -> usize {
        let mut total = 0;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            total += w[0] * w[1] + w[1];
            if l < self.batch_norm.len() && self.batch_norm[l] {
                total += 2 * w[1];
            }
        }
        total
    }
}

/// Offsets of one dense layer inside the flat parameter vector. The weight
/// block is stored input-major: `w[i * outputs + o]`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LayerLayout {
    pub inputs: usize,
    pub outputs: usize,
    pub w: usize,
    pub b: usize,
    /// Offsets of gamma and beta when the layer is batch-normalized.
    pub bn: Option<(usize, usize)>,
}

/// Running batch-norm statistics used at inference time.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Input normalizer: per-feature mean removal and one common scale, the
/// root mean of the per-feature variances. The inputs are the same quantity
/// at different lags, so a shared scale keeps their relative spread; with a
/// small sample, scaling each feature separately would blow up columns that
/// happen to hold only noise.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn fit(data: &Dataset) -> Result<Normalizer> {
        if data.is_empty() {
            return Err(Error::DegenerateDataset(
                "cannot fit a normalizer on no samples".into(),
            ));
        }
        let dim = data.dim();
        let n = data.len() as f64;
        let mut mean = vec![0.0; dim];
        for (x, _) in data.iter() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for (x, _) in data.iter() {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let pooled = (var.iter().sum::<f64>() / (n * dim as f64)).sqrt();
        let pooled = if pooled > 1e-12 { pooled } else { 1.0 };
        let scale = vec![pooled; dim];
        Ok(Normalizer { mean, scale })
    }

    pub fn identity(dim: usize) -> Normalizer {
        Normalizer {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }

    pub fn invert_into(&self, z: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(z).zip(&self.mean).zip(&self.scale) {
            *o = v * s + m;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch norm uses the statistics of the current batch.
    Train,
    /// Batch norm uses running statistics.
    Infer,
}

pub(crate) struct BnTrace {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

/// Intermediate values of a batched forward pass, kept for backprop.
pub(crate) struct Trace {
    pub n: usize,
    /// `acts[0]` is the (normalized) input, `acts[l + 1]` the output of layer
    /// `l`; for the last layer that is the logits.
    acts: Vec<Vec<f64>>,
    bn: Vec<Option<BnTrace>>,
    mode: Mode,
    /// Network output: softmax probabilities or the identity of the logits.
    pub out: Vec<f64>,
}

impl Trace {
    /// Sign of every hidden unit's output. Leaky-ReLU units keep the sign
    /// of their input, so a change in this pattern means some unit crossed
    /// its kink.
    pub(crate) fn hidden_signs(&self) -> Vec<bool> {
        let hidden = &self.acts[1..self.acts.len() - 1];
        hidden.iter().flatten().map(|&a| a > 0.0).collect()
    }
}

/// Feed-forward network with a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpNetwork {
    spec: NetworkSpec,
    layers: Vec<LayerLayout>,
    params: Vec<f64>,
    running: Vec<Option<RunningStats>>,
    normalizer: Option<Normalizer>,
    threshold: Option<f64>,
}

fn layout(spec: &NetworkSpec) -> Vec<LayerLayout> {
    let mut layers = Vec::new();
    let mut off = 0;
    for (l, w) in spec.layer_sizes.windows(2).enumerate() {
        let (inputs, outputs) = (w[0], w[1]);
        let wo = off;
        off += inputs * outputs;
        let b = off;
        off += outputs;
        let bn = if l < spec.batch_norm.len() && spec.batch_norm[l] {
            let g = off;
            off += 2 * outputs;
            Some((g, g + outputs))
        } else {
            None
        };
        layers.push(LayerLayout {
            inputs,
            outputs,
            w: wo,
            b,
            bn,
        });
    }
    layers
}

/// Convenience constructor: a two-class classifier with the same activation
/// in every hidden layer and weights uniform in `[-1, 1]`.
pub fn init_network<R: Rng + ?Sized>(
    layer_sizes: &[usize],
    activation: Activation,
    rng: &mut R,
) -> Result<MlpNetwork> {
    if layer_sizes.len() < 3 {
        return Err(Error::config("a network needs at least one hidden layer"));
    }
    let hidden = &layer_sizes[1..layer_sizes.len() - 1];
    let mut spec = NetworkSpec::classifier(layer_sizes[0], hidden, activation);
    spec.layer_sizes = layer_sizes.to_vec();
    MlpNetwork::new(spec, rng)
}

impl MlpNetwork {
    /// Builds a network with all parameters zero (batch-norm scales one).
    pub fn zeroed(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let layers = layout(&spec);
        let mut params = vec![0.0; spec.param_count()];
        let mut running = Vec::new();
        for l in &layers {
            if let Some((g, _)) = l.bn {
                params[g..g + l.outputs].fill(1.0);
                running.push(Some(RunningStats {
                    mean: vec![0.0; l.outputs],
                    var: vec![1.0; l.outputs],
                }));
            } else {
                running.push(None);
            }
        }
        Ok(MlpNetwork {
            spec,
            layers,
            params,
            running,
            normalizer: None,
            threshold: None,
        })
    }

    /// Builds a network with randomly initialized weights and biases.
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeroed(spec)?;
        for l in &net.layers {
            let limit = match net.spec.init {
                Init::Uniform(limit) => limit,
                Init::Glorot => (6.0 / (l.inputs + l.outputs) as f64).sqrt(),
            };
            for p in &mut net.params[l.w..l.b + l.outputs] {
                *p = if limit > 0.0 {
                    rng.random_range(-limit..=limit)
                } else {
                    0.0
                };
            }
        }
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.spec.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn running_stats(&self) -> &[Option<RunningStats>] {
        &self.running
    }

    pub(crate) fn running_stats_mut(&mut self) -> &mut [Option<RunningStats>] {
        &mut self.running
    }

    pub fn normalizer(&self) -> Option<&Normalizer> {
        self.normalizer.as_ref()
    }

    pub fn set_normalizer(&mut self, normalizer: Option<Normalizer>) -> Result<()> {
        if let Some(n) = &normalizer {
            let d = self.input_dim();
            if n.mean.len() != d || n.scale.len() != d {
                return Err(Error::Shape {
                    expected: d,
                    got: n.mean.len(),
                });
            }
        }
        self.normalizer = normalizer;
        Ok(())
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: Option<f64>) {
        self.threshold = threshold;
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Applies the input normalizer (identity when none is fitted) to a
    /// row-major batch.
    pub(crate) fn normalize_batch(&self, x: &[f64]) -> Vec<f64> {
        match &self.normalizer {
            None => x.to_vec(),
            Some(norm) => {
                let d = self.input_dim();
                let mut out = vec![0.0; x.len()];
                for (src, dst) in x.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
                    norm.apply_into(src, dst);
                }
                out
            }
        }
    }

    /// Output vector for one raw input (softmax probabilities for
    /// classifiers).
    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let xn = self.normalize_batch(x);
        Ok(self.run(&xn, 1, Mode::Infer).out)
    }

    /// Classification score: probability mass of the second ("alarm") class,
    /// i.e. busy for the transmitter and no-ACK for the jammer.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let out = self.output(x)?;
        Ok(out[1])
    }

    /// Scores of every sample of a dataset.
    pub fn scores(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.dim() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: data.dim(),
            });
        }
        if data.is_empty() {
            return Ok(Vec::new());
        }
        let xn = self.normalize_batch(data.features());
        let out = self.run(&xn, data.len(), Mode::Infer).out;
        let k = self.output_dim();
        Ok(out.chunks_exact(k).map(|r| r[1]).collect())
    }

    /// Returns `(positive, score)` with positive iff `score <= threshold`.
    pub fn decide(&self, x: &[f64]) -> Result<(bool, f64)> {
        let threshold = self.threshold.ok_or(Error::Untrained)?;
        let s = self.score(x)?;
        Ok((s <= threshold, s))
    }

    /// Batched forward pass over already-normalized inputs.
    pub(crate) fn run(&self, x: &[f64], n: usize, mode: Mode) -> Trace {
        debug_assert_eq!(x.len(), n * self.input_dim());
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut bns = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for (li, l) in self.layers.iter().enumerate() {
            let input = &acts[li];
            let mut z = vec![0.0; n * l.outputs];
            let w = &self.params[l.w..l.w + l.inputs * l.outputs];
            let b = &self.params[l.b..l.b + l.outputs];
            for (xr, zr) in input.chunks_exact(l.inputs).zip(z.chunks_exact_mut(l.outputs)) {
                zr.copy_from_slice(b);
                for (&xi, wr) in xr.iter().zip(w.chunks_exact(l.outputs)) {
                    if xi != 0.0 {
                        for (zo, &wo) in zr.iter_mut().zip(wr) {
                            *zo += xi * wo;
                        }
                    }
                }
            }
            if li == last {
                bns.push(None);
                acts.push(z);
                break;
            }
            let bn = l.bn.map(|(g, be)| {
                let gamma = &self.params[g..g + l.outputs];
                let beta = &self.params[be..be + l.outputs];
                self.batch_norm_forward(li, &mut z, n, gamma, beta, mode)
            });
            let act = self.spec.activations[li];
            z.iter_mut().for_each(|v| *v = act.apply(*v));
            bns.push(bn);
            acts.push(z);
        }
        let logits = acts.last().unwrap();
        let out = match self.spec.output {
            OutputKind::Linear => logits.clone(),
            OutputKind::Softmax => {
                let k = self.output_dim();
                let mut p = vec![0.0; logits.len()];
                for (lr, pr) in logits.chunks_exact(k).zip(p.chunks_exact_mut(k)) {
                    softmax_into(lr, pr);
                }
                p
            }
        };
        Trace {
            n,
            acts,
            bn: bns,
            mode,
            out,
        }
    }

    fn batch_norm_forward(
        &self,
        li: usize,
        z: &mut [f64],
        n: usize,
        gamma: &[f64],
        beta: &[f64],
        mode: Mode,
    ) -> BnTrace {
        let m = gamma.len();
        let (mean, var) = match mode {
            Mode::Train => {
                let mut mean = vec![0.0; m];
                for row in z.chunks_exact(m) {
                    for (a, v) in mean.iter_mut().zip(row) {
                        *a += v;
                    }
                }
                mean.iter_mut().for_each(|a| *a /= n as f64);
                let mut var = vec![0.0; m];
                for row in z.chunks_exact(m) {
                    for ((a, v), mu) in var.iter_mut().zip(row).zip(&mean) {
                        *a += (v - mu) * (v - mu);
                    }
                }
                var.iter_mut().for_each(|a| *a /= n as f64);
                (mean, var)
            }
            Mode::Infer => {
                let rs = self.running[li].as_ref().expect("running stats for bn layer");
                (rs.mean.clone(), rs.var.clone())
            }
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut xhat = vec![0.0; z.len()];
        for (zr, xr) in z.chunks_exact_mut(m).zip(xhat.chunks_exact_mut(m)) {
            for j in 0..m {
                let h = (zr[j] - mean[j]) * inv_std[j];
                xr[j] = h;
                zr[j] = gamma[j] * h + beta[j];
            }
        }
        BnTrace {
            xhat,
            inv_std,
            mean,
            var,
        }
    }

    /// Folds the batch statistics of a training pass into the running
    /// averages.
    pub(crate) fn absorb_batch_stats(&mut self, trace: &Trace) {
        for (rs, bn) in self.running.iter_mut().zip(&trace.bn) {
            if let (Some(rs), Some(bn)) = (rs.as_mut(), bn.as_ref()) {
                for j in 0..rs.mean.len() {
                    rs.mean[j] = (1.0 - BN_MOMENTUM) * rs.mean[j] + BN_MOMENTUM * bn.mean[j];
                    rs.var[j] = (1.0 - BN_MOMENTUM) * rs.var[j] + BN_MOMENTUM * bn.var[j];
                }
            }
        }
    }

    /// Backpropagates `grad_logits` (gradient of the loss with respect to
    /// the last layer's pre-output values) and accumulates parameter
    /// gradients into `grads`. Returns the gradient with respect to the
    /// (normalized) input when `want_input` is set.
    pub(crate) fn backprop(
        &self,
        trace: &Trace,
        grad_logits: &[f64],
        grads: &mut [f64],
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let n = trace.n;
        let mut delta = grad_logits.to_vec();
        for li in (0..self.layers.len()).rev() {
            let l = &self.layers[li];
            let input = &trace.acts[li];
            {
                let (gw, rest) = grads[l.w..].split_at_mut(l.inputs * l.outputs);
                let gb = &mut rest[..l.outputs];
                for (xr, dr) in input.chunks_exact(l.inputs).zip(delta.chunks_exact(l.outputs)) {
                    for (g, d) in gb.iter_mut().zip(dr) {
                        *g += d;
                    }
                    for (&xi, gr) in xr.iter().zip(gw.chunks_exact_mut(l.outputs)) {
                        if xi != 0.0 {
                            for (g, d) in gr.iter_mut().zip(dr) {
                                *g += xi * d;
                            }
                        }
                    }
                }
            }
            if li == 0 && !want_input {
                return None;
            }
            let w = &self.params[l.w..l.w + l.inputs * l.outputs];
            let mut din = vec![0.0; n * l.inputs];
            for (dr, ir) in delta.chunks_exact(l.outputs).zip(din.chunks_exact_mut(l.inputs)) {
                for (v, wr) in ir.iter_mut().zip(w.chunks_exact(l.outputs)) {
                    *v = wr.iter().zip(dr).map(|(a, b)| a * b).sum();
                }
            }
            if li == 0 {
                return Some(din);
            }
            // Through the activation and batch norm of the previous hidden
            // layer, whose output is this layer's input.
            let prev = li - 1;
            let act = self.spec.activations[prev];
            for (d, &a) in din.iter_mut().zip(input.iter()) {
                *d *= act.derivative_from_output(a);
            }
            if let (Some((g, be)), Some(bn)) = (self.layers[prev].bn, trace.bn[prev].as_ref()) {
                let m = self.layers[prev].outputs;
                din = self.batch_norm_backward(&din, bn, n, m, g, be, grads, trace.mode);
            }
            delta = din;
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn batch_norm_backward(
        &self,
        du: &[f64],
        bn: &BnTrace,
        n: usize,
        m: usize,
        g: usize,
        be: usize,
        grads: &mut [f64],
        mode: Mode,
    ) -> Vec<f64> {
        let gamma = &self.params[g..g + m];
        let mut sum_dxhat = vec![0.0; m];
        let mut sum_dxhat_xhat = vec![0.0; m];
        for (dr, xr) in du.chunks_exact(m).zip(bn.xhat.chunks_exact(m)) {
            for j in 0..m {
                grads[g + j] += dr[j] * xr[j];
                grads[be + j] += dr[j];
                let dxh = dr[j] * gamma[j];
                sum_dxhat[j] += dxh;
                sum_dxhat_xhat[j] += dxh * xr[j];
            }
        }
        let mut dz = vec![0.0; du.len()];
        let nf = n as f64;
        for ((dr, xr), zr) in du
            .chunks_exact(m)
            .zip(bn.xhat.chunks_exact(m))
            .zip(dz.chunks_exact_mut(m))
        {
            for j in 0..m {
                let dxh = dr[j] * gamma[j];
                zr[j] = match mode {
                    Mode::Train => {
                        bn.inv_std[j] / nf
                            * (nf * dxh - sum_dxhat[j] - xr[j] * sum_dxhat_xhat[j])
                    }
                    Mode::Infer => dxh * bn.inv_std[j],
                };
            }
        }
        dz
    }
}

/// Numerically stable softmax of one logit row.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn param_count_and_init_range() {
        let mut rng = stream(1, "init", 0);
        let net = init_network(&[10, 100, 2], Activation::Sigmoid, &mut rng).unwrap();
        assert_eq!(net.param_count(), 1302);
        assert!(net.params().iter().all(|p| p.abs() <= 1.0));
        let again = init_network(&[10, 100, 2], Activation::Sigmoid, &mut stream(1, "init", 0)).unwrap();
        assert_eq!(net, again);
        assert!(init_network(&[10, 2], Activation::Tanh, &mut rng).is_err());
        assert!(init_network(&[10, 0, 2], Activation::Tanh, &mut rng).is_err());
    }

    #[test]
    fn zero_network_scores_one_half() {
        let net = MlpNetwork::zeroed(NetworkSpec::classifier(3, &[4], Activation::Tanh)).unwrap();
        let s = net.score(&[0.3, -2.0, 7.0]).unwrap();
        assert_eq!(s, 0.5);
        assert!(matches!(net.score(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn hand_computed_two_two_two() {
        let mut net =
            MlpNetwork::zeroed(NetworkSpec::classifier(2, &[2], Activation::Sigmoid)).unwrap();
        // W1 input-major: w[i][o]
        let w1 = [0.5, -0.3, 0.8, 0.2];
        let b1 = [0.1, -0.1];
        let w2 = [1.0, -1.0, 0.5, 0.25];
        let b2 = [0.0, 0.2];
        let p = net.params_mut();
        p[0..4].copy_from_slice(&w1);
        p[4..6].copy_from_slice(&b1);
        p[6..10].copy_from_slice(&w2);
        p[10..12].copy_from_slice(&b2);

        let x = [1.5, -0.5];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let h0 = sig(x[0] * 0.5 + x[1] * 0.8 + 0.1);
        let h1 = sig(x[0] * -0.3 + x[1] * 0.2 - 0.1);
        let z0 = h0 * 1.0 + h1 * 0.5;
        let z1 = h0 * -1.0 + h1 * 0.25 + 0.2;
        let p1 = z1.exp() / (z0.exp() + z1.exp());
        let out = net.output(&x).unwrap();
        assert!((out[1] - p1).abs() < 1e-12);
        assert!((out[0] + out[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let mut out = [0.0; 2];
        softmax_into(&[1000.0, 1000.0], &mut out);
        assert_eq!(out, [0.5, 0.5]);
        softmax_into(&[-1e308, 0.0], &mut out);
        assert_eq!(out, [0.0, 1.0]);
    }

    #[test]
    fn activation_names_round_trip() {
        for a in [Activation::Sigmoid, Activation::Tanh, Activation::LeakyRelu(0.2)] {
            assert_eq!(Activation::parse(&a.name()), Some(a));
        }
        assert_eq!(Activation::parse("relu"), None);
        assert_eq!(Activation::parse("leaky-relu:nan"), None);
    }

    #[test]
    fn normalizer_centers_and_shares_one_scale() {
        let d = Dataset::from_rows(2, &[(vec![1.0, 4.0], true), (vec![3.0, 6.0], false)]).unwrap();
        let n = Normalizer::fit(&d).unwrap();
        assert_eq!(n.mean, vec![2.0, 5.0]);
        assert_eq!(n.scale, vec![1.0, 1.0]);
        let mut out = [0.0; 2];
        n.apply_into(&[3.0, 5.0], &mut out);
        assert_eq!(out, [1.0, 0.0]);
        let mut back = [0.0; 2];
        n.invert_into(&out, &mut back);
        assert_eq!(back, [3.0, 5.0]);

        // Variances 1 and 0 pool to 1/2; a constant column is not inflated.
        let d = Dataset::from_rows(2, &[(vec![1.0, 5.0], true), (vec![3.0, 5.0], false)]).unwrap();
        let n = Normalizer::fit(&d).unwrap();
        assert_eq!(n.scale, vec![0.5f64.sqrt(); 2]);
    }
}
