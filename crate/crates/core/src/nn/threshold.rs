use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An operating point: scores `<= threshold` are classified positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    /// Fraction of positives classified negative.
    pub e_md: f64,
    /// Fraction of negatives classified positive.
    pub e_fa: f64,
}

impl ThresholdChoice {
    pub fn max_error(&self) -> f64 {
        self.e_md.max(self.e_fa)
    }
}

fn check(scores: &[f64], positive: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != positive.len() {
        return Err(Error::Shape {
            expected: scores.len(),
            got: positive.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::DegenerateDataset("NaN score".into()));
    }
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateDataset(
            "threshold selection needs both classes".into(),
        ));
    }
    Ok((pos, neg))
}

/// Misdetection and false-alarm rates at a threshold.
pub fn error_rates(scores: &[f64], positive: &[bool], threshold: f64) -> Result<(f64, f64)> {
    let (pos, neg) = check(scores, positive)?;
    let mut missed = 0usize;
    let mut false_alarms = 0usize;
    for (&s, &p) in scores.iter().zip(positive) {
        let predicted = s <= threshold;
        if p && !predicted {
            missed += 1;
        }
        if !p && predicted {
            false_alarms += 1;
        }
    }
    Ok((missed as f64 / pos as f64, false_alarms as f64 / neg as f64))
}

/// Picks the threshold minimizing `max(e_md, e_fa)` among the midpoints of
/// consecutive distinct scores; ties go to the smallest threshold. With a
/// single distinct score that score itself is the only candidate.
pub fn select_threshold(scores: &[f64], positive: &[bool]) -> Result<ThresholdChoice> {
    let (pos, neg) = check(scores, positive)?;
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(positive.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Sweep upward; after consuming every score <= v, `pos_below` positives
    // and `neg_below` negatives are classified positive.
    let mut pos_below = 0usize;
    let mut neg_below = 0usize;
    let mut best: Option<(f64, ThresholdChoice)> = None;
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == v {
            if pairs[i].1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
        if i == pairs.len() {
            break;
        }
        let threshold = 0.5 * (v + pairs[i].0);
        let choice = ThresholdChoice {
            threshold,
            e_md: (pos - pos_below) as f64 / pos as f64,
            e_fa: neg_below as f64 / neg as f64,
        };
        let m = choice.max_error();
        if best.as_ref().is_none_or(|(b, _)| m < *b) {
            best = Some((m, choice));
        }
    }
    Ok(match best {
        Some((_, c)) => c,
        None => {
            let threshold = pairs[0].0;
            let (e_md, e_fa) = error_rates(scores, positive, threshold)?;
            ThresholdChoice {
                threshold,
                e_md,
                e_fa,
            }
        }
    })
}
