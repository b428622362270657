use crate::error::{Error, Result};

/// Labeled feature vectors stored row-major in one flat buffer.
///
/// `positive` is the class the owner wants to act on: idle for the
/// transmitter, ACK for the jammer. Classifier scores measure the opposite
/// class, so small scores mean "positive".
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    positive: Vec<bool>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset {
            dim,
            features: Vec::new(),
            positive: Vec::new(),
        }
    }

    pub fn from_rows(dim: usize, rows: &[(Vec<f64>, bool)]) -> Result<Self> {
        let mut d = Dataset::new(dim);
        for (x, y) in rows {
            d.push(x, *y)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, features: &[f64], positive: bool) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: features.len(),
            });
        }
        self.features.extend_from_slice(features);
        self.positive.push(positive);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> bool {
        self.positive[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.positive
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], bool)> + '_ {
        self.features
            .chunks_exact(self.dim.max(1))
            .zip(self.positive.iter().copied())
    }

    pub fn count_positive(&self) -> usize {
        self.positive.iter().filter(|&&p| p).count()
    }

    pub fn has_both_labels(&self) -> bool {
        let pos = self.count_positive();
        pos > 0 && pos < self.len()
    }

    pub(crate) fn require_both_labels(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::DegenerateDataset("dataset is empty".into()));
        }
        if !self.has_both_labels() {
            return Err(Error::DegenerateDataset(
                "dataset contains a single label".into(),
            ));
        }
        Ok(())
    }

    /// First half for training, second half for testing. With an odd count
    /// the extra sample goes to the training half.
    pub fn split_half(&self) -> (Dataset, Dataset) {
        let cut = self.len().div_ceil(2);
        (self.slice(0, cut), self.slice(cut, self.len()))
    }

    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            dim: self.dim,
            features: self.features[start * self.dim..end * self.dim].to_vec(),
            positive: self.positive[start..end].to_vec(),
        }
    }

    pub fn extend(&mut self, other: &Dataset) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: other.dim,
            });
        }
        self.features.extend_from_slice(&other.features);
        self.positive.extend_from_slice(&other.positive);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_and_extend() {
        let mut d = Dataset::new(2);
        for i in 0..5 {
            d.push(&[i as f64, 0.0], i % 2 == 0).unwrap();
        }
        let (a, b) = d.split_half();
        assert_eq!((a.len(), b.len()), (3, 2));
        assert_eq!(b.row(0), &[3.0, 0.0]);
        let mut c = a.clone();
        c.extend(&b).unwrap();
        assert_eq!(c, d);
        assert!(d.push(&[1.0], true).is_err());
    }

    #[test]
    fn single_label_is_degenerate() {
        let d = Dataset::from_rows(1, &[(vec![0.0], true), (vec![1.0], true)]).unwrap();
        assert!(matches!(
            d.require_both_labels(),
            Err(Error::DegenerateDataset(_))
        ));
    }
}
