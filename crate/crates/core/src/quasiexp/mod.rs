//! Matched comparisons of revisions: experts against novices, and novices
//! who co-edited with an expert against those who did not.

mod matching;
mod propensity;
mod report;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matching::{inverse_covariance, mahalanobis, match_mdm, match_units, MatchOptions, MatchedPair, Matching};
pub use propensity::{design_matrix, propensity, DesignMatrix, PropensityFit, PropensityOptions};
pub use report::{
    balance, effect, render_balance, render_effects, BalanceReport, CovariateBalance, EffectReport, Experiment,
    GroupStats,
};

use crate::corpus::{EditorPartition, Expertise, PageRecord};
use crate::metrics::{Metric, ScoredPage};
use crate::stats::logistic::LogisticError;

pub const UNKNOWN_TOPIC: &str = "Unknown";

#[derive(Debug, Error)]
pub enum QuasiError {
    #[error("need at least one treated and one control unit (got {treated} treated, {control} control)")]
    OneSided { treated: usize, control: usize },
    #[error("propensity model: {0}")]
    Propensity(#[from] LogisticError),
    #[error("covariance of numeric covariates is singular; prune constant or collinear covariates")]
    SingularCovariance,
    #[error("propensity scores are required for psm ({got} scores for {want} units)")]
    Scores { got: usize, want: usize },
    #[error("need at least {need} matched pairs, got {got}")]
    TooFewPairs { need: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Design {
    /// Expert (treated) against novice (control) revisions.
    Expertise,
    /// Novice revisions: unexposed (treated) against exposed (control).
    Interaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Psm,
    Mdm,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $kw:literal),+ }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $kw),+ })
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.to_ascii_lowercase().as_str() {
                    $($kw => Ok($ty::$variant),)+
                    _ => Err(format!(concat!("unknown ", stringify!($ty), " `{}` (expected one of: ", $($kw, " "),+, ")"), s)),
                }
            }
        }
    };
}

keyword_enum!(Design { Expertise => "expertise", Interaction => "interaction" });
keyword_enum!(Method { Psm => "psm", Mdm => "mdm" });

/// Numeric covariates plus the topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    /// Metric score of the page before the revision.
    pub prev_score: f64,
    /// Byte delta of the revision.
    pub rev_size: f64,
    pub topic: String,
    /// Editor's prior revision count (interaction design only).
    pub user_rev_count: Option<f64>,
}

impl Covariates {
    pub fn numeric(&self) -> Vec<f64> {
        let mut v = vec![self.prev_score, self.rev_size];
        v.extend(self.user_rev_count);
        v
    }

    pub fn numeric_names(&self) -> Vec<&'static str> {
        let mut v = vec!["prev_score", "rev_size"];
        if self.user_rev_count.is_some() {
            v.push("user_rev_count");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchUnit {
    pub revision_id: u64,
    pub page_id: u64,
    pub editor_id: u64,
    pub treatment: bool,
    pub covariates: Covariates,
    /// dRN or dRR of the revision.
    pub outcome: f64,
}

/// First UTC day on which each novice edited a page that an expert also
/// edited that day.
pub fn exposure_days(corpus: &[PageRecord], partition: &EditorPartition) -> BTreeMap<u64, NaiveDate> {
    let mut first: BTreeMap<u64, NaiveDate> = BTreeMap::new();
    for page in corpus {
        let mut by_day: BTreeMap<NaiveDate, (bool, Vec<u64>)> = BTreeMap::new();
        for rev in &page.revisions {
            let Some(editor) = rev.human_editor() else { continue };
            let slot = by_day.entry(rev.timestamp.date_naive()).or_default();
            match partition.expertise(editor) {
                Some(Expertise::Expert) => slot.0 = true,
                Some(Expertise::Novice) => slot.1.push(editor),
                _ => {}
            }
        }
        for (day, (expert_present, novices)) in by_day {
            if !expert_present {
                continue;
            }
            for n in novices {
                first.entry(n).and_modify(|d| *d = (*d).min(day)).or_insert(day);
            }
        }
    }
    first
}

/// Whether each novice ever co-edited a page with an expert on the same
/// UTC day.
pub fn label_exposure(corpus: &[PageRecord], partition: &EditorPartition) -> BTreeMap<u64, bool> {
    let days = exposure_days(corpus, partition);
    partition
        .profiles
        .values()
        .filter(|p| p.expertise == Expertise::Novice)
        .map(|p| (p.editor_id, days.contains_key(&p.editor_id)))
        .collect()
}

/// Sets `exposed` on the partition's profiles.
pub fn apply_exposure(partition: &mut EditorPartition, exposure: &BTreeMap<u64, bool>) {
    for (id, exposed) in exposure {
        if let Some(p) = partition.profiles.get_mut(id) {
            p.exposed = *exposed;
        }
    }
}

/// Matching units of `design` for one outcome metric.
///
/// A revision qualifies when its editor is in the design's population and
/// its metric change is defined and nonzero. In the interaction design a
/// novice revision counts as exposed when the editor's first exposure day
/// is on or before the revision's day.
pub fn build_units(pages: &[ScoredPage], partition: &EditorPartition, design: Design, metric: Metric) -> Vec<MatchUnit> {
    let corpus: Vec<PageRecord> = pages.iter().map(|p| p.page.clone()).collect();
    let exposure = match design {
        Design::Interaction => exposure_days(&corpus, partition),
        Design::Expertise => BTreeMap::new(),
    };
    let mut units = Vec::new();
    for sp in pages {
        let topic = sp.page.meta_topic.map_or_else(|| UNKNOWN_TOPIC.to_string(), |t| t.to_string());
        for (i, d) in sp.deltas().iter().enumerate() {
            let rev = &sp.page.revisions[i + 1];
            let Some(outcome) = d.of(metric).filter(|v| *v != 0.0) else { continue };
            let Some(editor) = rev.human_editor() else { continue };
            let Some(prev_score) = metric.of(&sp.scores[i]) else { continue };
            let expertise = partition.expertise(editor);
            let (treatment, user_rev_count) = match (design, expertise) {
                (Design::Expertise, Some(Expertise::Expert)) => (true, None),
                (Design::Expertise, Some(Expertise::Novice)) => (false, None),
                (Design::Interaction, Some(Expertise::Novice)) => {
                    let exposed = exposure.get(&editor).is_some_and(|day| *day <= rev.timestamp.date_naive());
                    (!exposed, Some(rev.prior_user_revision_count as f64))
                }
                _ => continue,
            };
            units.push(MatchUnit {
                revision_id: rev.revision_id,
                page_id: sp.page.page_id,
                editor_id: editor,
                treatment,
                covariates: Covariates { prev_score, rev_size: rev.byte_delta as f64, topic: topic.clone(), user_rev_count },
                outcome,
            });
        }
    }
    units
}

pub(crate) fn split_groups(units: &[MatchUnit]) -> Result<(Vec<usize>, Vec<usize>), QuasiError> {
    let (treated, control): (Vec<usize>, Vec<usize>) = (0..units.len()).partition(|&i| units[i].treatment);
    if treated.is_empty() || control.is_empty() {
        return Err(QuasiError::OneSided { treated: treated.len(), control: control.len() });
    }
    Ok((treated, control))
}

/// Group counts per topic, topics sorted.
pub(crate) fn topic_table<'a>(treated: impl Iterator<Item = &'a MatchUnit>, control: impl Iterator<Item = &'a MatchUnit>) -> Vec<Vec<f64>> {
    let mut counts: BTreeMap<&str, [f64; 2]> = BTreeMap::new();
    for u in treated {
        counts.entry(&u.covariates.topic).or_default()[0] += 1.0;
    }
    for u in control {
        counts.entry(&u.covariates.topic).or_default()[1] += 1.0;
    }
    counts.into_values().map(|c| c.to_vec()).collect()
}

pub(crate) fn topic_levels(units: &[MatchUnit]) -> Vec<String> {
    let mut seen: HashMap<&str, ()> = HashMap::new();
    let mut levels: Vec<String> = Vec::new();
    for u in units {
        if seen.insert(&u.covariates.topic, ()).is_none() {
            levels.push(u.covariates.topic.clone());
        }
    }
    levels.sort();
    levels
}
