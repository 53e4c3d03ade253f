use std::path::Path;

use super::{validate_threshold, NeedError};
use crate::stats::logistic::{self, sigmoid, LogisticFit, LogisticOptions};

/// A citation-need scorer over `(sentence vector, section vector)` pairs.
pub trait NeedModel: Send + Sync {
    /// Embedding dimension `d` of each input vector.
    fn dimension(&self) -> usize;

    fn threshold(&self) -> f64;

    /// Score in `[0, 1]`; higher means more likely to need a citation.
    fn score(&self, sentence: &[f64], section: &[f64]) -> Result<f64, NeedError>;
}

/// `sigmoid(w . [s; t] + b)`.
///
/// File layout: `d threshold` on the first line, the `2d` weights on the
/// second, the bias on the third.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticNeedModel {
    dimension: usize,
    threshold: f64,
    weights: Vec<f64>,
    bias: f64,
}

impl LogisticNeedModel {
    pub fn new(weights: Vec<f64>, bias: f64, threshold: f64) -> Result<Self, NeedError> {
        validate_threshold(threshold)?;
        if weights.is_empty() || !weights.len().is_multiple_of(2) {
            return Err(NeedError::Parse {
                line: 2,
                message: format!("weight vector must have even positive length, got {}", weights.len()),
            });
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(NeedError::Parse { line: 2, message: "non-finite model parameter".into() });
        }
        Ok(LogisticNeedModel { dimension: weights.len() / 2, threshold, weights, bias })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, NeedError> {
        validate_threshold(threshold)?;
        self.threshold = threshold;
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self, NeedError> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() != 3 {
            return Err(NeedError::Parse { line: lines.len().min(3), message: "expected 3 lines".into() });
        }
        let nums = |line: usize, s: &str| -> Result<Vec<f64>, NeedError> {
            s.split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<_, _>>()
                .map_err(|e| NeedError::Parse { line, message: e.to_string() })
        };
        let head: Vec<&str> = lines[0].split_whitespace().collect();
        if head.len() != 2 {
            return Err(NeedError::Parse { line: 1, message: "expected `d threshold`".into() });
        }
        let d: usize = head[0].parse().map_err(|_| NeedError::Parse { line: 1, message: "bad dimension".into() })?;
        let threshold: f64 =
            head[1].parse().map_err(|_| NeedError::Parse { line: 1, message: "bad threshold".into() })?;
        let weights = nums(2, lines[1])?;
        if weights.len() != 2 * d {
            return Err(NeedError::Dimension { expected: 2 * d, got: weights.len(), context: "model weights".into() });
        }
        let bias = nums(3, lines[2])?;
        let [bias] = bias[..] else {
            return Err(NeedError::Parse { line: 3, message: "expected a single bias".into() });
        };
        Self::new(weights, bias, threshold)
    }

    pub fn load(path: &Path) -> Result<Self, NeedError> {
        Self::parse(&super::read(path)?)
    }

    pub fn to_text(&self) -> String {
        let weights: Vec<String> = self.weights.iter().map(f64::to_string).collect();
        format!("{} {}\n{}\n{}\n", self.dimension, self.threshold, weights.join(" "), self.bias)
    }

    pub fn save(&self, path: &Path) -> Result<(), NeedError> {
        super::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn logit(&self, sentence: &[f64], section: &[f64]) -> Result<f64, NeedError> {
        for (v, what) in [(sentence, "sentence vector"), (section, "section vector")] {
            if v.len() != self.dimension {
                return Err(NeedError::Dimension { expected: self.dimension, got: v.len(), context: what.into() });
            }
        }
        let (ws, wt) = self.weights.split_at(self.dimension);
        let dot = |w: &[f64], x: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        Ok(dot(ws, sentence) + dot(wt, section) + self.bias)
    }

    /// Fits by IRLS on concatenated `[s; t]` features.
    pub fn train(
        examples: &[(Vec<f64>, Vec<f64>)],
        labels: &[bool],
        ridge: f64,
        threshold: f64,
    ) -> Result<(Self, LogisticFit), NeedError> {
        let rows: Vec<Vec<f64>> = examples.iter().map(|(s, t)| s.iter().chain(t).copied().collect()).collect();
        let opts = LogisticOptions { ridge, ..LogisticOptions::default() };
        let fit = logistic::fit(&rows, labels, &opts)?;
        let model = Self::new(fit.coefficients[1..].to_vec(), fit.coefficients[0], threshold)?;
        Ok((model, fit))
    }
}

impl NeedModel for LogisticNeedModel {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn score(&self, sentence: &[f64], section: &[f64]) -> Result<f64, NeedError> {
        Ok(sigmoid(self.logit(sentence, section)?))
    }
}
