use super::{NnError, Scalar, Tensor};

const PROB_FLOOR: f64 = 1e-12;
const SUM_TOLERANCE: f64 = 1e-6;

/// A softmax output: entries in [0, 1] summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbabilities(Vec<f64>);

impl ClassProbabilities {
    pub fn new(probs: Vec<f64>) -> Result<Self, NnError> {
        if probs.is_empty() {
            return Err(NnError::InvalidProbabilities("empty vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(NnError::InvalidProbabilities(format!("entry {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(NnError::InvalidProbabilities(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(classes: usize) -> Self {
        Self(vec![1.0 / classes as f64; classes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Splits a `(batch, classes)` softmax output into per-sample vectors.
    pub fn from_batch<T: Scalar>(probs: &Tensor<T>) -> Result<Vec<Self>, NnError> {
        let classes = probs.shape()[1];
        probs
            .data()
            .chunks_exact(classes)
            .map(|row| Self::new(row.iter().map(|v| v.to_f64_lossy()).collect()))
            .collect()
    }
}

pub fn one_hot(label: usize, classes: usize) -> Vec<f64> {
    let mut v = vec![0.0; classes];
    v[label] = 1.0;
    v
}

/// `-sum_i y_i * ln(y_hat_i)` with predictions clipped to `[1e-12, 1]`.
pub fn cross_entropy_loss(y_true: &[f64], y_pred: &ClassProbabilities) -> f64 {
    assert_eq!(y_true.len(), y_pred.len(), "label and prediction widths differ");
    -y_true
        .iter()
        .zip(y_pred.as_slice())
        .map(|(y, p)| y * p.clamp(PROB_FLOOR, 1.0).ln())
        .sum::<f64>()
}

/// Mean cross-entropy of integer labels against a `(batch, classes)` tensor.
pub fn batch_cross_entropy<T: Scalar>(probs: &Tensor<T>, labels: &[usize]) -> f64 {
    let classes = probs.shape()[1];
    let total: f64 = probs
        .data()
        .chunks_exact(classes)
        .zip(labels)
        .map(|(row, &l)| -row[l].to_f64_lossy().clamp(PROB_FLOOR, 1.0).ln())
        .sum();
    total / labels.len() as f64
}
