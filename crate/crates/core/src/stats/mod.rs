//! Statistical kernels shared by the metrics, lifespan and matching code.
//!
//! Everything here operates on plain slices so the callers can keep their own
//! data layouts. Distribution tails come from `statrs`.

pub mod logistic;

use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample variance with the `n - 1` denominator. `None` below two samples.
pub fn sample_variance(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some(ss / (values.len() - 1) as f64)
}

pub fn sample_sd(values: &[f64]) -> Option<f64> {
    sample_variance(values).map(f64::sqrt)
}

/// Quantile by linear interpolation between order statistics
/// (position `q * (n - 1)`). Input must be sorted ascending.
pub fn quantile_linear(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Lower quantile: the order statistic at `floor(q * (n - 1))`. The median
/// of an even-sized sample is the lower middle element.
pub fn quantile_lower(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    Some(sorted[idx])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Welch's unequal-variance two-sample t-test of `a - b`.
///
/// Both groups need at least two observations. When both variances vanish
/// the statistic is 0 for equal means and infinite otherwise.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<TTest> {
    let (ma, mb) = (mean(a)?, mean(b)?);
    let (va, vb) = (sample_variance(a)?, sample_variance(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let diff = ma - mb;
        if diff == 0.0 {
            return Some(TTest { t: 0.0, df: na + nb - 2.0, p: 1.0 });
        }
        return Some(TTest {
            t: diff.signum() * f64::INFINITY,
            df: na + nb - 2.0,
            p: 0.0,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Some(TTest { t, df, p })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

/// Pearson chi-square test of independence on a contingency table of
/// counts (rows x columns). All-zero rows and columns are dropped first; a
/// table that collapses below 2x2 is reported as perfectly independent.
pub fn chi_square_independence(table: &[Vec<f64>]) -> ChiSquare {
    let rows: Vec<&Vec<f64>> = table.iter().filter(|r| r.iter().sum::<f64>() > 0.0).collect();
    let ncols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let col_sum = |j: usize| rows.iter().map(|r| r.get(j).copied().unwrap_or(0.0)).sum::<f64>();
    let cols: Vec<usize> = (0..ncols).filter(|&j| col_sum(j) > 0.0).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return ChiSquare { statistic: 0.0, df: 0, p: 1.0 };
    }
    let total: f64 = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    let mut stat = 0.0;
    for r in &rows {
        let row_total: f64 = r.iter().sum();
        for &j in &cols {
            let expected = row_total * col_sum(j) / total;
            let observed = r.get(j).copied().unwrap_or(0.0);
            stat += (observed - expected).powi(2) / expected;
        }
    }
    let df = (rows.len() - 1) * (cols.len() - 1);
    let p = ChiSquared::new(df as f64)
        .map(|d| d.sf(stat))
        .unwrap_or(f64::NAN)
        .clamp(0.0, 1.0);
    ChiSquare { statistic: stat, df, p }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smd {
    Finite(f64),
    /// Pooled variance is zero while the means differ.
    Unbounded { sign: f64 },
}

impl Smd {
    pub fn value(self) -> f64 {
        match self {
            Smd::Finite(v) => v,
            Smd::Unbounded { sign } => sign * f64::INFINITY,
        }
    }
}

/// Standardized mean difference `(mean_t - mean_c) / sqrt((var_t + var_c) / 2)`
/// with sample variances. Groups of size one contribute zero variance.
pub fn smd(treated: &[f64], control: &[f64]) -> Option<Smd> {
    let (mt, mc) = (mean(treated)?, mean(control)?);
    let vt = sample_variance(treated).unwrap_or(0.0);
    let vc = sample_variance(control).unwrap_or(0.0);
    let pooled = ((vt + vc) / 2.0).sqrt();
    let diff = mt - mc;
    if pooled == 0.0 {
        if diff == 0.0 {
            return Some(Smd::Finite(0.0));
        }
        return Some(Smd::Unbounded { sign: diff.signum() });
    }
    Some(Smd::Finite(diff / pooled))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddsRatio {
    pub value: f64,
    /// Haldane-Anscombe correction (+0.5 per cell) was applied.
    pub corrected: bool,
}

/// Odds ratio `(a/b) / (c/d)` of a 2x2 table. Any zero cell triggers the
/// Haldane-Anscombe correction.
pub fn odds_ratio(a: u64, b: u64, c: u64, d: u64) -> OddsRatio {
    let corrected = a == 0 || b == 0 || c == 0 || d == 0;
    let shift = if corrected { 0.5 } else { 0.0 };
    let (a, b, c, d) = (
        a as f64 + shift,
        b as f64 + shift,
        c as f64 + shift,
        d as f64 + shift,
    );
    OddsRatio { value: (a * d) / (b * c), corrected }
}

/// Empirical CDF over a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    /// NaNs are discarded.
    pub fn new(samples: &[f64]) -> Self {
        let mut sorted: Vec<f64> = samples.iter().copied().filter(|v| !v.is_nan()).collect();
        sorted.sort_by(f64::total_cmp);
        Ecdf { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        let k = self.sorted.partition_point(|v| *v <= x);
        k as f64 / self.sorted.len() as f64
    }

    /// Step points `(x, F(x))`, one per distinct sample value.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }

    pub fn quantile_lower(&self, q: f64) -> Option<f64> {
        quantile_lower(&self.sorted, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn welch_textbook_vectors() {
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r.t, -1.224744871391589, epsilon = 1e-12);
        assert_abs_diff_eq!(r.df, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p, 0.2878, epsilon = 1e-3);
    }

    #[test]
    fn welch_identical_groups() {
        let r = welch_t_test(&[1.0, 1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        let r = welch_t_test(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
    }

    #[test]
    fn welch_needs_two_per_group() {
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn smd_by_hand() {
        // means 1 and 0, both sample variances 1
        let t = [0.0, 1.0, 2.0];
        let c = [-1.0, 0.0, 1.0];
        assert_eq!(smd(&t, &c), Some(Smd::Finite(1.0)));
        assert_eq!(smd(&[2.0, 2.0], &[2.0, 2.0]), Some(Smd::Finite(0.0)));
        assert_eq!(smd(&[3.0, 3.0], &[2.0, 2.0]), Some(Smd::Unbounded { sign: 1.0 }));
    }

    #[test]
    fn odds_ratio_cells() {
        assert_eq!(odds_ratio(9, 1, 5, 5), OddsRatio { value: 9.0, corrected: false });
        assert_eq!(odds_ratio(4, 6, 4, 6).value, 1.0);
        let r = odds_ratio(3, 0, 1, 1);
        assert!(r.corrected);
        assert_abs_diff_eq!(r.value, (3.5 * 1.5) / (0.5 * 1.5));
    }

    #[test]
    fn quartiles_linear_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 100.0];
        assert_abs_diff_eq!(quantile_linear(&v, 0.25).unwrap(), 2.75);
        assert_abs_diff_eq!(quantile_linear(&v, 0.75).unwrap(), 6.25);
        assert_eq!(quantile_linear(&[4.0], 0.25), Some(4.0));
    }

    #[test]
    fn lower_quantile_even_median() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_lower(&v, 0.5), Some(2.0));
        assert_eq!(quantile_lower(&v, 0.75), Some(3.0));
        assert_eq!(quantile_lower(&[], 0.5), None);
    }

    #[test]
    fn chi_square_identical_rows() {
        let r = chi_square_independence(&[vec![5.0, 3.0, 2.0], vec![5.0, 3.0, 2.0]]);
        assert_eq!(r.statistic, 0.0);
        assert_abs_diff_eq!(r.p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_square_by_hand() {
        // 2x2 table [[10, 20], [20, 10]]: expected 15 everywhere, stat = 4 * 25/15
        let r = chi_square_independence(&[vec![10.0, 20.0], vec![20.0, 10.0]]);
        assert_abs_diff_eq!(r.statistic, 100.0 / 15.0, epsilon = 1e-12);
        assert_eq!(r.df, 1);
        // P(chi2_1 > 6.6667) = erfc(sqrt(6.6667/2))
        assert_abs_diff_eq!(r.p, 0.009823, epsilon = 1e-5);
    }

    #[test]
    fn chi_square_degenerate_single_column() {
        let r = chi_square_independence(&[vec![4.0, 0.0], vec![7.0, 0.0]]);
        assert_eq!(r.p, 1.0);
    }

    proptest! {
        #[test]
        fn ecdf_is_monotone_and_reaches_one(samples in prop::collection::vec(0.0f64..1000.0, 1..60)) {
            let e = Ecdf::new(&samples);
            let steps = e.steps();
            for w in steps.windows(2) {
                prop_assert!(w[0].0 < w[1].0);
                prop_assert!(w[0].1 < w[1].1);
            }
            let max = e.samples().last().copied().unwrap();
            prop_assert_eq!(e.eval(max), 1.0);
            for &(x, f) in &steps {
                // right-continuous: value at the jump point includes the jump
                prop_assert_eq!(e.eval(x), f);
                prop_assert!(e.eval(x - 1e-9) < f);
            }
        }
    }
}
