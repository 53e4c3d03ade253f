use super::{split_groups, topic_levels, MatchUnit, QuasiError};
use crate::stats::logistic::{self, LogisticFit, LogisticOptions};
use crate::stats::{mean, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq)]
#[derive(Default)]
pub struct PropensityOptions {
    pub logistic: LogisticOptions,
}


impl PropensityOptions {
    pub fn with_ridge(ridge: f64) -> Self {
        PropensityOptions { logistic: LogisticOptions { ridge, ..LogisticOptions::default() } }
    }
}

/// Standardized numeric covariates followed by topic dummies (first level
/// dropped). Constant numeric columns are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: Vec<Vec<f64>>,
    pub columns: Vec<String>,
}

pub fn design_matrix(units: &[MatchUnit]) -> DesignMatrix {
    let mut columns = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    if let Some(first) = units.first() {
        for (k, name) in first.covariates.numeric_names().into_iter().enumerate() {
            let raw: Vec<f64> = units.iter().map(|u| u.covariates.numeric().get(k).copied().unwrap_or(0.0)).collect();
            let m = mean(&raw).unwrap_or(0.0);
            match sample_sd(&raw) {
                Some(sd) if sd > 0.0 => {
                    cols.push(raw.iter().map(|v| (v - m) / sd).collect());
                    columns.push(name.to_string());
                }
                _ => {}
            }
        }
    }
    for level in topic_levels(units).into_iter().skip(1) {
        cols.push(units.iter().map(|u| if u.covariates.topic == level { 1.0 } else { 0.0 }).collect());
        columns.push(format!("topic={level}"));
    }
    let rows = (0..units.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    DesignMatrix { rows, columns }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropensityFit {
    /// Fitted treatment probability per unit.
    pub scores: Vec<f64>,
    pub columns: Vec<String>,
    pub fit: LogisticFit,
}

/// Logistic regression of treatment on the covariates.
pub fn propensity(units: &[MatchUnit], options: &PropensityOptions) -> Result<PropensityFit, QuasiError> {
    split_groups(units)?;
    let design = design_matrix(units);
    let y: Vec<bool> = units.iter().map(|u| u.treatment).collect();
    let fit = logistic::fit(&design.rows, &y, &options.logistic)?;
    let scores = design.rows.iter().map(|r| fit.predict(r)).collect();
    Ok(PropensityFit { scores, columns: design.columns, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasiexp::Covariates;
    use crate::stats::logistic::LogisticError;
    use proptest::prelude::*;

    fn unit(i: usize, treatment: bool, prev: f64, size: f64, topic: &str) -> MatchUnit {
        MatchUnit {
            revision_id: i as u64,
            page_id: 1,
            editor_id: 1,
            treatment,
            covariates: Covariates { prev_score: prev, rev_size: size, topic: topic.into(), user_rev_count: None },
            outcome: 0.1,
        }
    }

    #[test]
    fn identical_covariates_give_treated_fraction() {
        let units: Vec<MatchUnit> = (0..10).map(|i| unit(i, i < 4, 0.5, 7.0, "Culture")).collect();
        let p = propensity(&units, &PropensityOptions::default()).unwrap();
        assert!(p.columns.is_empty());
        for s in p.scores {
            assert!((s - 0.4).abs() < 1e-10);
        }
    }

    #[test]
    fn perfect_predictor_is_separation() {
        let units: Vec<MatchUnit> = (0..20).map(|i| unit(i, i >= 10, i as f64, 1.0 + (i % 3) as f64, "Culture")).collect();
        let err = propensity(&units, &PropensityOptions::default()).unwrap_err();
        assert!(matches!(err, QuasiError::Propensity(LogisticError::Separation { .. })), "{err}");
        assert!(propensity(&units, &PropensityOptions::with_ridge(1.0)).is_ok());
    }

    #[test]
    fn one_sided_is_rejected() {
        let units: Vec<MatchUnit> = (0..4).map(|i| unit(i, true, i as f64, 1.0, "Culture")).collect();
        assert!(matches!(propensity(&units, &PropensityOptions::default()), Err(QuasiError::OneSided { .. })));
    }

    #[test]
    fn topic_dummies_drop_first_level() {
        let units = vec![unit(0, true, 0.1, 1.0, "STEM"), unit(1, false, 0.2, 2.0, "Culture"), unit(2, false, 0.3, 4.0, "Geography")];
        let d = design_matrix(&units);
        assert_eq!(d.columns, ["prev_score", "rev_size", "topic=Geography", "topic=STEM"]);
        assert_eq!(d.rows[0][3], 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn invariant_under_affine_rescaling(
            data in prop::collection::vec((0.0f64..1.0, -50.0f64..50.0, any::<bool>()), 30..60),
            scale in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
            shift in -1e3f64..1e3,
        ) {
            let mut units: Vec<MatchUnit> = data.iter().enumerate().map(|(i, &(p, s, t))| unit(i, t, p, s, "Culture")).collect();
            units[0].treatment = true;
            units[1].treatment = false;
            let Ok(a) = propensity(&units, &PropensityOptions::default()) else { return Ok(()) };
            for u in &mut units {
                u.covariates.rev_size = u.covariates.rev_size * scale + shift;
            }
            let b = propensity(&units, &PropensityOptions::default()).unwrap();
            for (x, y) in a.scores.iter().zip(&b.scores) {
                prop_assert!((x - y).abs() < 1e-8);
            }
        }
    }
}
