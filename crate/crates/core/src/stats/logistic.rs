//! Binary logistic regression fitted by iteratively reweighted least squares.
//!
//! Used both for the propensity model and for training the bundled
//! citation-need scorer.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Linear predictors beyond this magnitude saturate the sigmoid in f64.
const SATURATION: f64 = 35.0;

#[derive(Debug, Error)]
pub enum LogisticError {
    #[error("design is empty or rows have inconsistent lengths")]
    BadDesign,
    #[error("response has {got} entries but design has {want} rows")]
    ResponseLength { got: usize, want: usize },
    #[error("response contains only one class")]
    SingleClass,
    #[error(
        "perfect separation: fitted probabilities hit 0 or 1 after {iterations} iterations; \
         refit with a ridge penalty"
    )]
    Separation { iterations: usize },
    #[error("information matrix is singular at iteration {iteration}; drop collinear covariates or add a ridge penalty")]
    Singular { iteration: usize },
    #[error("no convergence after {} iterations (max parameter change per iteration: {trace:?})", trace.len())]
    NonConvergence { trace: Vec<f64> },
    #[error("non-finite value in design or response")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    /// Stop when the largest absolute parameter change drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// L2 penalty on the non-intercept coefficients.
    pub ridge: f64,
    pub intercept: bool,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions { tolerance: 1e-8, max_iterations: 100, ridge: 0.0, intercept: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    /// Intercept first when the model has one, then one weight per column.
    pub coefficients: Vec<f64>,
    pub intercept: bool,
    pub iterations: usize,
    /// Max absolute parameter change at each iteration.
    pub trace: Vec<f64>,
    pub log_likelihood: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticFit {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        let (b0, w) = if self.intercept {
            (self.coefficients[0], &self.coefficients[1..])
        } else {
            (0.0, &self.coefficients[..])
        };
        b0 + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }
}

pub fn fit(rows: &[Vec<f64>], y: &[bool], options: &LogisticOptions) -> Result<LogisticFit, LogisticError> {
    let n = rows.len();
    if n == 0 {
        return Err(LogisticError::BadDesign);
    }
    if y.len() != n {
        return Err(LogisticError::ResponseLength { got: y.len(), want: n });
    }
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(LogisticError::BadDesign);
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(LogisticError::NonFinite);
    }
    let positives = y.iter().filter(|v| **v).count();
    if positives == 0 || positives == n {
        return Err(LogisticError::SingleClass);
    }

    let offset = usize::from(options.intercept);
    let p = k + offset;
    let x = DMatrix::from_fn(n, p, |i, j| {
        if options.intercept && j == 0 {
            1.0
        } else {
            rows[i][j - offset]
        }
    });
    let target = DVector::from_iterator(n, y.iter().map(|&v| if v { 1.0 } else { 0.0 }));
    let mut penalty = DVector::from_element(p, options.ridge);
    if options.intercept {
        penalty[0] = 0.0;
    }

    let mut beta = DVector::<f64>::zeros(p);
    let mut trace = Vec::new();
    for iteration in 1..=options.max_iterations {
        let eta = &x * &beta;
        let mu = eta.map(sigmoid);
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-300));

        // X' W X + diag(penalty)
        let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * w[i]);
        let mut info = x.transpose() * xw;
        for j in 0..p {
            info[(j, j)] += penalty[j];
        }
        let grad = x.transpose() * (&target - &mu) - penalty.component_mul(&beta);
        let step = match info.cholesky() {
            Some(c) => c.solve(&grad),
            None => return Err(LogisticError::Singular { iteration }),
        };
        beta += &step;
        let change = step.amax();
        trace.push(change);
        if !change.is_finite() {
            return Err(LogisticError::Separation { iterations: iteration });
        }

        let eta = &x * &beta;
        if separated(&eta, y) {
            return Err(LogisticError::Separation { iterations: iteration });
        }
        if change < options.tolerance {
            let log_likelihood = log_likelihood(&eta, y);
            return Ok(LogisticFit {
                coefficients: beta.iter().copied().collect(),
                intercept: options.intercept,
                iterations: iteration,
                trace,
                log_likelihood,
            });
        }
    }
    Err(LogisticError::NonConvergence { trace })
}

/// Some unit sits at a saturated linear predictor on the correct side.
fn separated(eta: &DVector<f64>, y: &[bool]) -> bool {
    eta.iter()
        .zip(y)
        .any(|(&e, &yi)| e.abs() > SATURATION && (e > 0.0) == yi)
}

fn log_likelihood(eta: &DVector<f64>, y: &[bool]) -> f64 {
    // log(1 + exp(z)) computed stably
    let softplus = |z: f64| if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| if yi { -softplus(-e) } else { -softplus(e) })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn intercept_only_recovers_base_rate() {
        let rows = vec![vec![]; 10];
        let y: Vec<bool> = (0..10).map(|i| i < 3).collect();
        let f = fit(&rows, &y, &LogisticOptions::default()).unwrap();
        assert_abs_diff_eq!(f.predict(&[]), 0.3, epsilon = 1e-10);
    }

    #[test]
    fn perfectly_separated_covariate() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let err = fit(&rows, &y, &LogisticOptions::default()).unwrap_err();
        assert!(matches!(err, LogisticError::Separation { .. }), "{err}");
    }

    #[test]
    fn ridge_tames_separation() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 10.0 - 1.0]).collect();
        let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let opts = LogisticOptions { ridge: 1.0, ..Default::default() };
        let f = fit(&rows, &y, &opts).unwrap();
        assert!(f.predict(&[1.0]) > 0.5);
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![vec![1.0]; 3];
        assert!(matches!(
            fit(&rows, &[true, true, true], &LogisticOptions::default()),
            Err(LogisticError::SingleClass)
        ));
    }

    #[test]
    fn score_equation_holds_at_optimum() {
        // overlapping classes: gradient X'(y - p) vanishes at the MLE
        let xs = [0.1, 0.5, 0.9, 1.3, 1.7, 2.1, 2.5, 2.9];
        let ys = [false, false, true, false, true, false, true, true];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v]).collect();
        let f = fit(&rows, &ys, &LogisticOptions::default()).unwrap();
        let (mut g0, mut g1) = (0.0, 0.0);
        for (r, &yi) in rows.iter().zip(&ys) {
            let resid = f64::from(u8::from(yi)) - f.predict(r);
            g0 += resid;
            g1 += resid * r[0];
        }
        assert_abs_diff_eq!(g0, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g1, 0.0, epsilon = 1e-9);
        assert!(f.iterations <= 100);
    }
}
