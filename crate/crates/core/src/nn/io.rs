//! Versioned plain-text network files.
//!
//! ```text
//! jamsim-mlp 1
//! layers 10 100 2
//! activations sigmoid
//! batch-norm 0
//! output softmax
//! init uniform:1
//! normalizer
//! mean ...
//! scale ...
//! threshold 0.25
//! params 1302
//! <values, whitespace separated, row-major per layer>
//! end
//! ```
//!
//! Batch-normalized layers add `running-mean <layer> ...` and
//! `running-var <layer> ...` lines before `params`. A network without a
//! normalizer writes `normalizer none`; without a threshold, `threshold none`.

use std::fmt::Write as _;
use std::path::Path;

use super::network::{Activation, Init, MlpNetwork, NetworkSpec, Normalizer, OutputKind};
use crate::error::{Error, Result};

const MAGIC: &str = "jamsim-mlp";
const VERSION: u32 = 1;
const MAX_PARAMS: usize = 50_000_000;

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

impl MlpNetwork {
    pub fn to_text(&self) -> String {
        let spec = self.spec();
        let mut out = String::new();
        writeln!(out, "{MAGIC} {VERSION}").unwrap();
        let sizes: Vec<String> = spec.layer_sizes.iter().map(|s| s.to_string()).collect();
        writeln!(out, "layers {}", sizes.join(" ")).unwrap();
        let acts: Vec<String> = spec.activations.iter().map(|a| a.name()).collect();
        writeln!(out, "activations {}", acts.join(" ")).unwrap();
        let bn: Vec<&str> = spec.batch_norm.iter().map(|&b| if b { "1" } else { "0" }).collect();
        writeln!(out, "batch-norm {}", bn.join(" ")).unwrap();
        let output = match spec.output {
            OutputKind::Softmax => "softmax",
            OutputKind::Linear => "linear",
        };
        writeln!(out, "output {output}").unwrap();
        match spec.init {
            Init::Uniform(l) => writeln!(out, "init uniform:{l}").unwrap(),
            Init::Glorot => writeln!(out, "init glorot").unwrap(),
        }
        match self.normalizer() {
            None => writeln!(out, "normalizer none").unwrap(),
            Some(n) => {
                writeln!(out, "normalizer").unwrap();
                writeln!(out, "mean {}", join(&n.mean)).unwrap();
                writeln!(out, "scale {}", join(&n.scale)).unwrap();
            }
        }
        match self.threshold() {
            None => writeln!(out, "threshold none").unwrap(),
            Some(t) => writeln!(out, "threshold {t}").unwrap(),
        }
        for (i, rs) in self.running_stats().iter().enumerate() {
            if let Some(rs) = rs {
                writeln!(out, "running-mean {i} {}", join(&rs.mean)).unwrap();
                writeln!(out, "running-var {i} {}", join(&rs.var)).unwrap();
            }
        }
        writeln!(out, "params {}", self.param_count()).unwrap();
        for chunk in self.params().chunks(8) {
            writeln!(out, "{}", join(chunk)).unwrap();
        }
        writeln!(out, "end").unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<MlpNetwork> {
        Parser::new(text).network()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<MlpNetwork> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        MlpNetwork::from_text(&text)
    }
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line_no: usize,
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, "non-finite number"));
    }
    Ok(v)
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("bad count {tok:?}")))
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            lines: text.lines().enumerate().peekable(),
            line_no: 0,
        }
    }

    /// Next non-blank line split into tokens.
    fn next_tokens(&mut self) -> Result<Vec<&'a str>> {
        for (i, line) in self.lines.by_ref() {
            self.line_no = i + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok(toks);
            }
        }
        Err(Error::parse(self.line_no + 1, "unexpected end of file"))
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let toks = self.next_tokens()?;
        if toks[0] != key {
            return Err(Error::parse(
                self.line_no,
                format!("expected {key:?}, found {:?}", toks[0]),
            ));
        }
        Ok(toks[1..].to_vec())
    }

    fn floats(&self, toks: &[&str], expected: usize) -> Result<Vec<f64>> {
        if toks.len() != expected {
            return Err(Error::parse(
                self.line_no,
                format!("expected {expected} values, found {}", toks.len()),
            ));
        }
        toks.iter().map(|t| parse_f64(t, self.line_no)).collect()
    }

    fn network(mut self) -> Result<MlpNetwork> {
        let head = self.keyed(MAGIC)?;
        if head != [VERSION.to_string().as_str()] {
            return Err(Error::parse(self.line_no, "unsupported version"));
        }
        let sizes = self
            .keyed("layers")?
            .iter()
            .map(|t| parse_usize(t, self.line_no))
            .collect::<Result<Vec<_>>>()?;
        if sizes.iter().any(|&s| s > MAX_PARAMS) {
            return Err(Error::parse(self.line_no, "layer too wide"));
        }
        let acts = self
            .keyed("activations")?
            .iter()
            .map(|t| {
                Activation::parse(t)
                    .ok_or_else(|| Error::parse(self.line_no, format!("unknown activation {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let bn = self
            .keyed("batch-norm")?
            .iter()
            .map(|t| match *t {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(Error::parse(self.line_no, "batch-norm flags are 0 or 1")),
            })
            .collect::<Result<Vec<_>>>()?;
        let output = match self.keyed("output")?.as_slice() {
            ["softmax"] => OutputKind::Softmax,
            ["linear"] => OutputKind::Linear,
            _ => return Err(Error::parse(self.line_no, "output is softmax or linear")),
        };
        let init = match self.keyed("init")?.as_slice() {
            ["glorot"] => Init::Glorot,
            [t] if t.starts_with("uniform:") => Init::Uniform(parse_f64(&t[8..], self.line_no)?),
            _ => return Err(Error::parse(self.line_no, "bad init")),
        };
        let spec = NetworkSpec {
            layer_sizes: sizes,
            activations: acts,
            batch_norm: bn,
            output,
            init,
        };
        let spec_line = self.line_no;
        spec.validate()
            .map_err(|e| Error::parse(spec_line, e.to_string()))?;
        if spec
            .layer_sizes
            .windows(2)
            .try_fold(0usize, |acc, w| acc.checked_add(w[0].checked_mul(w[1])?))
            .is_none_or(|n| n > MAX_PARAMS)
        {
            return Err(Error::parse(spec_line, "network too large"));
        }
        let mut net = MlpNetwork::zeroed(spec)?;
        let dim = net.input_dim();

        let norm = self.keyed("normalizer")?;
        match norm.as_slice() {
            ["none"] => {}
            [] => {
                let mean = self.keyed("mean")?;
                let mean = self.floats(&mean, dim)?;
                let scale = self.keyed("scale")?;
                let scale = self.floats(&scale, dim)?;
                if scale.iter().any(|&s| s <= 0.0) {
                    return Err(Error::parse(self.line_no, "normalizer scale must be positive"));
                }
                net.set_normalizer(Some(Normalizer { mean, scale }))?;
            }
            _ => return Err(Error::parse(self.line_no, "bad normalizer line")),
        }

        let threshold = match self.keyed("threshold")?.as_slice() {
            ["none"] => None,
            [t] => Some(parse_f64(t, self.line_no)?),
            _ => return Err(Error::parse(self.line_no, "bad threshold line")),
        };
        net.set_threshold(threshold);

        let bn_layers: Vec<(usize, usize)> = net
            .running_stats()
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|r| (i, r.mean.len())))
            .collect();
        for (layer, width) in bn_layers {
            for key in ["running-mean", "running-var"] {
                let toks = self.keyed(key)?;
                if toks.first().map(|t| parse_usize(t, self.line_no)).transpose()? != Some(layer) {
                    return Err(Error::parse(self.line_no, "running stats for wrong layer"));
                }
                let values = self.floats(&toks[1..], width)?;
                if key == "running-var" && values.iter().any(|&v| v < 0.0) {
                    return Err(Error::parse(self.line_no, "negative running variance"));
                }
                let rs = net.running_stats_mut()[layer].as_mut().unwrap();
                if key == "running-mean" {
                    rs.mean = values;
                } else {
                    rs.var = values;
                }
            }
        }

        let count = self.keyed("params")?;
        let count = match count.as_slice() {
            [c] => parse_usize(c, self.line_no)?,
            _ => return Err(Error::parse(self.line_no, "bad params line")),
        };
        if count != net.param_count() {
            return Err(Error::parse(
                self.line_no,
                format!("expected {} parameters, header says {count}", net.param_count()),
            ));
        }
        let mut values = Vec::with_capacity(count);
        loop {
            let toks = self.next_tokens()?;
            if toks == ["end"] {
                break;
            }
            for t in toks {
                values.push(parse_f64(t, self.line_no)?);
                if values.len() > count {
                    return Err(Error::parse(self.line_no, "too many parameters"));
                }
            }
        }
        if values.len() != count {
            return Err(Error::parse(self.line_no, "too few parameters"));
        }
        net.params_mut().copy_from_slice(&values);
        if self.next_tokens().is_ok() {
            return Err(Error::parse(self.line_no, "trailing content after end"));
        }
        Ok(net)
    }
}
