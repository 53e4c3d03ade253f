use super::{topic_table, Design, MatchUnit, Matching, Method, QuasiError};
use crate::metrics::{Dataset, Metric};
use crate::stats::{chi_square_independence, mean, sample_sd, smd, welch_t_test, Smd};
use crate::tsv;

/// Labels one matched comparison in the output tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Experiment {
    pub dataset: Dataset,
    pub metric: Metric,
    pub design: Design,
    pub method: Method,
}

fn outcome_name(metric: Metric) -> &'static str {
    match metric {
        Metric::Rn => "drn",
        Metric::Rr => "drr",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateBalance {
    pub name: String,
    /// Over all units.
    pub before: Smd,
    /// Over matched units.
    pub after: Smd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub experiment: Experiment,
    pub n_pairs: usize,
    pub numeric: Vec<CovariateBalance>,
    /// Chi-square p-value of topic by group before matching.
    pub topic_p_before: f64,
    /// Same over matched units.
    pub topic_p_after: f64,
}

impl BalanceReport {
    pub fn max_abs_smd_after(&self) -> f64 {
        self.numeric.iter().map(|c| c.after.value().abs()).fold(0.0, f64::max)
    }
}

fn column(units: &[MatchUnit], idx: impl Iterator<Item = usize>, k: usize) -> Vec<f64> {
    idx.map(|i| units[i].covariates.numeric()[k]).collect()
}

/// Standardized mean differences before and after matching, and topic
/// independence tests.
pub fn balance(units: &[MatchUnit], matching: &Matching, experiment: Experiment) -> Result<BalanceReport, QuasiError> {
    if matching.pairs.len() < 2 {
        return Err(QuasiError::TooFewPairs { need: 2, got: matching.pairs.len() });
    }
    let (treated, control) = super::split_groups(units)?;
    let mt: Vec<usize> = matching.pairs.iter().map(|p| p.treated).collect();
    let mc: Vec<usize> = matching.pairs.iter().map(|p| p.control).collect();
    let names = units[0].covariates.numeric_names();
    let numeric = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let s = |t: &[usize], c: &[usize]| {
                smd(&column(units, t.iter().copied(), k), &column(units, c.iter().copied(), k)).expect("nonempty groups")
            };
            CovariateBalance { name: name.to_string(), before: s(&treated, &control), after: s(&mt, &mc) }
        })
        .collect();
    let before = chi_square_independence(&topic_table(
        treated.iter().map(|&i| &units[i]),
        control.iter().map(|&i| &units[i]),
    ));
    let after = chi_square_independence(&topic_table(mt.iter().map(|&i| &units[i]), mc.iter().map(|&i| &units[i])));
    Ok(BalanceReport {
        experiment,
        n_pairs: matching.pairs.len(),
        numeric,
        topic_p_before: before.p,
        topic_p_after: after.p,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub label: &'static str,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl GroupStats {
    fn of(label: &'static str, values: &[f64]) -> Self {
        GroupStats {
            label,
            n: values.len(),
            mean: mean(values).unwrap_or(f64::NAN),
            sd: sample_sd(values).unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectReport {
    pub experiment: Experiment,
    pub first: GroupStats,
    pub second: GroupStats,
    /// Welch t of `first - second`.
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub n_pairs: usize,
}

impl EffectReport {
    pub fn mean_difference(&self) -> f64 {
        self.first.mean - self.second.mean
    }

    /// Welch standard error of the mean difference.
    pub fn standard_error(&self) -> f64 {
        (self.first.sd.powi(2) / self.first.n as f64 + self.second.sd.powi(2) / self.second.n as f64).sqrt()
    }
}

/// Outcome means of the matched groups and a Welch test. Experts come
/// first in the expertise design, exposed novices in the interaction one.
pub fn effect(units: &[MatchUnit], matching: &Matching, experiment: Experiment) -> Result<EffectReport, QuasiError> {
    if matching.pairs.len() < 2 {
        return Err(QuasiError::TooFewPairs { need: 2, got: matching.pairs.len() });
    }
    let treated: Vec<f64> = matching.pairs.iter().map(|p| units[p.treated].outcome).collect();
    let control: Vec<f64> = matching.pairs.iter().map(|p| units[p.control].outcome).collect();
    let (first, second) = match experiment.design {
        Design::Expertise => (GroupStats::of("expert", &treated), GroupStats::of("novice", &control)),
        Design::Interaction => (GroupStats::of("exposed", &control), GroupStats::of("unexposed", &treated)),
    };
    let (a, b) = match experiment.design {
        Design::Expertise => (&treated, &control),
        Design::Interaction => (&control, &treated),
    };
    let test = welch_t_test(a, b).ok_or(QuasiError::TooFewPairs { need: 2, got: matching.pairs.len() })?;
    Ok(EffectReport { experiment, first, second, t: test.t, df: test.df, p: test.p, n_pairs: matching.pairs.len() })
}

pub const EFFECT_HEADER: [&str; 15] = [
    "dataset", "metric", "design", "method", "n_pairs", "first_group", "first_mean", "first_sd", "second_group",
    "second_mean", "second_sd", "t", "df", "p_value", "mean_difference",
];

pub fn render_effects(reports: &[EffectReport]) -> String {
    let mut out = tsv::row(EFFECT_HEADER);
    for r in reports {
        let e = r.experiment;
        out.push_str(&tsv::row([
            e.dataset.to_string(),
            outcome_name(e.metric).to_string(),
            e.design.to_string(),
            e.method.to_string(),
            r.n_pairs.to_string(),
            r.first.label.to_string(),
            r.first.mean.to_string(),
            r.first.sd.to_string(),
            r.second.label.to_string(),
            r.second.mean.to_string(),
            r.second.sd.to_string(),
            r.t.to_string(),
            r.df.to_string(),
            r.p.to_string(),
            r.mean_difference().to_string(),
        ]));
    }
    out
}

/// One row per report; the user revision count columns are `NA` when the
/// design has no such covariate.
pub fn render_balance(reports: &[BalanceReport]) -> String {
    const COVARIATES: [&str; 3] = ["prev_score", "rev_size", "user_rev_count"];
    let mut header: Vec<String> = ["dataset", "metric", "design", "method", "n_pairs"].map(String::from).to_vec();
    for c in COVARIATES {
        header.push(format!("smd_{c}_before"));
        header.push(format!("smd_{c}_after"));
    }
    header.push("topic_chi2_p_before".into());
    header.push("topic_chi2_p_after".into());
    let mut out = tsv::row(&header);
    for r in reports {
        let e = r.experiment;
        let mut row = vec![
            e.dataset.to_string(),
            outcome_name(e.metric).to_string(),
            e.design.to_string(),
            e.method.to_string(),
            r.n_pairs.to_string(),
        ];
        for c in COVARIATES {
            match r.numeric.iter().find(|b| b.name == c) {
                Some(b) => {
                    row.push(b.before.value().to_string());
                    row.push(b.after.value().to_string());
                }
                None => row.extend(["NA".to_string(), "NA".to_string()]),
            }
        }
        row.push(r.topic_p_before.to_string());
        row.push(r.topic_p_after.to_string());
        out.push_str(&tsv::row(row));
    }
    out
}
