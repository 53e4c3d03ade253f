use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use ordered_float::OrderedFloat;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{split_groups, MatchUnit, Method, QuasiError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    pub method: Method,
    pub seed: u64,
    /// Largest admissible distance; `None` accepts any nearest neighbour.
    pub caliper: Option<f64>,
    pub replacement: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions { method: Method::Psm, seed: 0, caliper: None, replacement: false }
    }
}

/// Indices into the unit slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub treated: usize,
    pub control: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    /// Treated units left without a control.
    pub unmatched_treated: usize,
}

fn treated_order(treated: &[usize], seed: u64) -> Vec<usize> {
    let mut order = treated.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Greedy one-to-one nearest-neighbour matching, treated units visited in a
/// seeded random order. `scores` are required for [`Method::Psm`].
pub fn match_units(units: &[MatchUnit], scores: Option<&[f64]>, options: &MatchOptions) -> Result<Matching, QuasiError> {
    match options.method {
        Method::Psm => {
            let scores = scores.ok_or(QuasiError::Scores { got: 0, want: units.len() })?;
            match_psm(units, scores, options)
        }
        Method::Mdm => {
            let inv = inverse_covariance(units)?;
            match_mdm(units, &inv, options)
        }
    }
}

fn match_psm(units: &[MatchUnit], scores: &[f64], options: &MatchOptions) -> Result<Matching, QuasiError> {
    if scores.len() != units.len() {
        return Err(QuasiError::Scores { got: scores.len(), want: units.len() });
    }
    let (treated, control) = split_groups(units)?;
    let mut pool: BTreeMap<OrderedFloat<f64>, Vec<usize>> = BTreeMap::new();
    for &c in control.iter().rev() {
        pool.entry(OrderedFloat(scores[c])).or_default().push(c);
    }
    let mut pairs = Vec::new();
    let mut unmatched = 0;
    for t in treated_order(&treated, options.seed) {
        let s = scores[t];
        let below = pool.range(..=OrderedFloat(s)).next_back().map(|(k, _)| *k);
        let above = pool.range(OrderedFloat(s)..).next().map(|(k, _)| *k);
        let best = match (below, above) {
            (Some(b), Some(a)) => Some(if s - b.0 <= a.0 - s { b } else { a }),
            (b, a) => b.or(a),
        };
        let Some(key) = best else {
            unmatched += 1;
            continue;
        };
        let distance = (key.0 - s).abs();
        if options.caliper.is_some_and(|c| distance > c) {
            unmatched += 1;
            continue;
        }
        let bucket = pool.get_mut(&key).expect("key present");
        // lowest unit index within a tie bucket
        let control = *bucket.last().expect("nonempty bucket");
        if !options.replacement {
            bucket.pop();
            if bucket.is_empty() {
                pool.remove(&key);
            }
        }
        pairs.push(MatchedPair { treated: t, control, distance });
    }
    Ok(Matching { pairs, unmatched_treated: unmatched })
}

/// Inverse of the sample covariance of the numeric covariates over all units.
pub fn inverse_covariance(units: &[MatchUnit]) -> Result<DMatrix<f64>, QuasiError> {
    let rows: Vec<Vec<f64>> = units.iter().map(|u| u.covariates.numeric()).collect();
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if n < 2 || k == 0 {
        return Err(QuasiError::SingularCovariance);
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let means = x.row_mean();
    let centered = DMatrix::from_fn(n, k, |i, j| x[(i, j)] - means[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let chol = cov.cholesky().ok_or(QuasiError::SingularCovariance)?;
    let inv = chol.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(QuasiError::SingularCovariance);
    }
    Ok(inv)
}

pub fn mahalanobis(a: &[f64], b: &[f64], inverse_covariance: &DMatrix<f64>) -> f64 {
    let d = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(x, y)| x - y));
    (d.transpose() * inverse_covariance * &d)[(0, 0)].max(0.0).sqrt()
}

/// Nearest control by Mahalanobis distance among controls with the same
/// topic.
pub fn match_mdm(units: &[MatchUnit], inverse_covariance: &DMatrix<f64>, options: &MatchOptions) -> Result<Matching, QuasiError> {
    let (treated, control) = split_groups(units)?;
    let numeric: Vec<Vec<f64>> = units.iter().map(|u| u.covariates.numeric()).collect();
    let mut by_topic: HashMap<&str, Vec<usize>> = HashMap::new();
    for &c in &control {
        by_topic.entry(&units[c].covariates.topic).or_default().push(c);
    }
    let mut pairs = Vec::new();
    let mut unmatched = 0;
    for t in treated_order(&treated, options.seed) {
        let candidates = by_topic.get_mut(units[t].covariates.topic.as_str());
        let best = candidates.as_ref().and_then(|cands| {
            cands
                .iter()
                .enumerate()
                .map(|(slot, &c)| (slot, c, mahalanobis(&numeric[t], &numeric[c], inverse_covariance)))
                .min_by(|a, b| a.2.total_cmp(&b.2).then(a.1.cmp(&b.1)))
        });
        let Some((slot, c, distance)) = best else {
            unmatched += 1;
            continue;
        };
        if options.caliper.is_some_and(|cal| distance > cal) {
            unmatched += 1;
            continue;
        }
        if !options.replacement {
            candidates.expect("candidates exist").swap_remove(slot);
        }
        pairs.push(MatchedPair { treated: t, control: c, distance });
    }
    Ok(Matching { pairs, unmatched_treated: unmatched })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasiexp::Covariates;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn unit(treatment: bool, prev: f64, size: f64, topic: &str) -> MatchUnit {
        MatchUnit {
            revision_id: 0,
            page_id: 0,
            editor_id: 0,
            treatment,
            covariates: Covariates { prev_score: prev, rev_size: size, topic: topic.into(), user_rev_count: None },
            outcome: 1.0,
        }
    }

    #[test]
    fn psm_nearest_neighbour() {
        let units = vec![unit(true, 0.0, 0.0, "A"), unit(false, 0.0, 0.0, "A"), unit(false, 0.0, 0.0, "A")];
        let m = match_units(&units, Some(&[0.5, 0.48, 0.10]), &MatchOptions::default()).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].control, 1);
        assert!((m.pairs[0].distance - 0.02).abs() < 1e-12);
    }

    #[test]
    fn psm_without_replacement_drops_extra_treated() {
        let units = vec![unit(true, 0.0, 0.0, "A"), unit(true, 0.0, 0.0, "A"), unit(false, 0.0, 0.0, "A")];
        let m = match_units(&units, Some(&[0.5, 0.6, 0.55]), &MatchOptions::default()).unwrap();
        assert_eq!((m.pairs.len(), m.unmatched_treated), (1, 1));
        let m = match_units(&units, Some(&[0.5, 0.6, 0.55]), &MatchOptions { replacement: true, ..Default::default() }).unwrap();
        assert_eq!((m.pairs.len(), m.unmatched_treated), (2, 0));
        let m = match_units(&units, Some(&[0.5, 0.6, 0.55]), &MatchOptions { caliper: Some(0.01), ..Default::default() }).unwrap();
        assert_eq!((m.pairs.len(), m.unmatched_treated), (0, 2));
    }

    #[test]
    fn mdm_identity_is_euclidean() {
        let units = vec![unit(true, 0.0, 0.0, "A"), unit(false, 3.0, 4.0, "A"), unit(false, 1.0, 1.0, "A")];
        let id = DMatrix::identity(2, 2);
        let m = match_mdm(&units, &id, &MatchOptions { method: Method::Mdm, ..Default::default() }).unwrap();
        assert_eq!(m.pairs[0].control, 2);
        assert!((m.pairs[0].distance - 2f64.sqrt()).abs() < 1e-12);
        assert!((mahalanobis(&[0.0, 0.0], &[3.0, 4.0], &id) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mdm_requires_exact_topic() {
        let units = vec![unit(true, 0.0, 0.0, "A"), unit(false, 0.0, 0.1, "B"), unit(false, 9.0, 9.0, "A")];
        let m = match_units(&units, None, &MatchOptions { method: Method::Mdm, ..Default::default() }).unwrap();
        assert_eq!(m.pairs[0].control, 2);
    }

    #[test]
    fn singular_covariance() {
        let units = vec![unit(true, 1.0, 2.0, "A"), unit(false, 1.0, 3.0, "A"), unit(false, 1.0, 5.0, "A")];
        let err = match_units(&units, None, &MatchOptions { method: Method::Mdm, ..Default::default() }).unwrap_err();
        assert!(matches!(err, QuasiError::SingularCovariance));
    }

    proptest! {
        #[test]
        fn no_control_reused_and_deterministic(
            data in prop::collection::vec((any::<bool>(), 0.0f64..1.0, 0.0f64..1.0), 2..60),
            seed in any::<u64>(),
        ) {
            let mut units: Vec<MatchUnit> = data.iter().map(|&(t, p, s)| unit(t, p, s, if p < 0.5 { "A" } else { "B" })).collect();
            units[0].treatment = true;
            units[1].treatment = false;
            let scores: Vec<f64> = data.iter().map(|d| d.1).collect();
            for method in [Method::Psm, Method::Mdm] {
                let opts = MatchOptions { method, seed, ..Default::default() };
                let Ok(m) = match_units(&units, Some(&scores), &opts) else { continue };
                let controls: HashSet<usize> = m.pairs.iter().map(|p| p.control).collect();
                prop_assert_eq!(controls.len(), m.pairs.len());
                prop_assert!(m.pairs.iter().all(|p| units[p.treated].treatment && !units[p.control].treatment));
                let again = match_units(&units, Some(&scores), &opts).unwrap();
                prop_assert_eq!(m, again);
            }
        }
    }
}
