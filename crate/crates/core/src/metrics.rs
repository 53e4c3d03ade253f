//! Reference need (RN), reference risk (RR), their per-revision changes,
//! yearly aggregates and the odds ratio of improvement.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::citation_need::LabeledSentence;
use crate::corpus::{MetaTopic, PageRecord};
use crate::perennial::{is_risky, PerennialList};
use crate::stats::{self, OddsRatio};
use crate::tsv;
use crate::wikitext::ExtractedReference;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("page {page_id} has {scores} scores for {revisions} revisions")]
    Misaligned { page_id: u64, scores: usize, revisions: usize },
    #[error("no page in the {0} corpus has two defined scores")]
    NoComparablePages(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Rn,
    Rr,
}

impl Metric {
    pub fn of(self, score: &QualityScore) -> Option<f64> {
        match self {
            Metric::Rn => score.rn,
            Metric::Rr => score.rr,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rn => "rn",
            Metric::Rr => "rr",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rn" => Ok(Metric::Rn),
            "rr" => Ok(Metric::Rr),
            _ => Err(format!("unknown metric `{s}` (expected rn or rr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    Top,
    Random,
    Current,
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dataset::Top => "top",
            Dataset::Random => "random",
            Dataset::Current => "current",
        })
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "top" => Ok(Dataset::Top),
            "random" => Ok(Dataset::Random),
            "current" => Ok(Dataset::Current),
            _ => Err(format!("unknown dataset `{s}` (expected top, random or current)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub revision_id: u64,
    pub rn: Option<f64>,
    pub rr: Option<f64>,
    /// Sentences with `y = 1`.
    pub n_need: usize,
    /// Of those, sentences with an inline citation.
    pub n_need_cited: usize,
    pub n_citations: usize,
    pub n_risky: usize,
}

impl QualityScore {
    pub fn new(revision_id: u64, n_need: usize, n_need_cited: usize, n_citations: usize, n_risky: usize) -> Self {
        QualityScore {
            revision_id,
            rn: rn_from_counts(n_need, n_need_cited),
            rr: rr_from_counts(n_citations, n_risky),
            n_need,
            n_need_cited,
            n_citations,
            n_risky,
        }
    }
}

pub fn rn_from_counts(n_need: usize, n_need_cited: usize) -> Option<f64> {
    (n_need > 0).then(|| (n_need - n_need_cited) as f64 / n_need as f64)
}

pub fn rr_from_counts(n_citations: usize, n_risky: usize) -> Option<f64> {
    (n_citations > 0).then(|| n_risky as f64 / n_citations as f64)
}

/// `(|P|, cited members of P)` with `P` the sentences labeled `y = 1`.
pub fn need_counts(sentences: &[LabeledSentence]) -> (usize, usize) {
    sentences.iter().filter(|s| s.y).fold((0, 0), |(n, c), s| (n + 1, c + usize::from(s.sentence.has_citation)))
}

/// Fraction of citation-needing sentences without an inline citation.
pub fn rn(sentences: &[LabeledSentence]) -> Option<f64> {
    let (n, c) = need_counts(sentences);
    rn_from_counts(n, c)
}

/// `(N, x)`: citation instances and those pointing at risky domains.
pub fn risk_counts(citations: &[ExtractedReference], list: &PerennialList) -> (usize, usize) {
    (citations.len(), citations.iter().filter(|r| is_risky(&r.host, list)).count())
}

/// Fraction of citation instances pointing at deprecated or blacklisted
/// domains.
pub fn rr(citations: &[ExtractedReference], list: &PerennialList) -> Option<f64> {
    let (n, x) = risk_counts(citations, list);
    rr_from_counts(n, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaScore {
    pub revision_id: u64,
    pub d_rn: Option<f64>,
    pub d_rr: Option<f64>,
}

impl DeltaScore {
    pub fn of(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Rn => self.d_rn,
            Metric::Rr => self.d_rr,
        }
    }
}

fn diff(cur: Option<f64>, prev: Option<f64>) -> Option<f64> {
    Some(cur? - prev?)
}

/// Change against the previous revision for every revision but the first.
pub fn deltas(scores: &[QualityScore]) -> Vec<DeltaScore> {
    scores
        .windows(2)
        .map(|w| DeltaScore { revision_id: w[1].revision_id, d_rn: diff(w[1].rn, w[0].rn), d_rr: diff(w[1].rr, w[0].rr) })
        .collect()
}

/// A page with one score per revision, in revision order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPage {
    pub page: PageRecord,
    pub scores: Vec<QualityScore>,
}

impl ScoredPage {
    pub fn new(page: PageRecord, scores: Vec<QualityScore>) -> Result<Self, MetricsError> {
        if page.revisions.len() != scores.len() {
            return Err(MetricsError::Misaligned {
                page_id: page.page_id,
                scores: scores.len(),
                revisions: page.revisions.len(),
            });
        }
        Ok(ScoredPage { page, scores })
    }

    pub fn deltas(&self) -> Vec<DeltaScore> {
        deltas(&self.scores)
    }

    /// Score of the last revision at or before `t`.
    pub fn state_at(&self, t: DateTime<Utc>) -> Option<&QualityScore> {
        let k = self.page.revisions.partition_point(|r| r.timestamp <= t);
        k.checked_sub(1).map(|i| &self.scores[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPoint {
    pub year: i32,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub dataset: Dataset,
    pub topic: Option<MetaTopic>,
    pub metric: Metric,
    /// Single contributing page; `stderr` is reported as 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct YearRange {
    pub from: Option<i32>,
    pub to: Option<i32>,
}

/// Mean and standard error across pages of each page's year-end state.
///
/// A page contributes from the year of its first revision to the last year
/// seen anywhere in `pages`, carrying the score of its latest revision at
/// each year end; a page whose latest revision has an undefined score is
/// left out of that year. Years with no
/// contributing pages are omitted.
pub fn yearly_series(
    pages: &[ScoredPage],
    metric: Metric,
    topic: Option<MetaTopic>,
    dataset: Dataset,
    range: YearRange,
) -> Vec<TimeSeriesPoint> {
    let selected: Vec<&ScoredPage> =
        pages.iter().filter(|p| topic.is_none() || p.page.meta_topic == topic).filter(|p| !p.scores.is_empty()).collect();
    let Some(last_year) = pages.iter().filter_map(|p| p.page.revisions.last()).map(|r| r.timestamp.year()).max()
    else {
        return Vec::new();
    };
    let last_year = range.to.map_or(last_year, |t| t.min(last_year));
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for p in &selected {
        let first = p.page.revisions[0].timestamp.year().max(range.from.unwrap_or(i32::MIN));
        let mut idx = 0usize;
        for year in first..=last_year {
            let year_end = chrono::NaiveDate::from_ymd_opt(year + 1, 1, 1)
                .expect("valid year")
                .and_hms_opt(0, 0, 0)
                .expect("midnight")
                .and_utc();
            while idx < p.page.revisions.len() && p.page.revisions[idx].timestamp < year_end {
                idx += 1;
            }
            if idx == 0 {
                continue;
            }
            if let Some(v) = metric.of(&p.scores[idx - 1]) {
                by_year.entry(year).or_default().push(v);
            }
        }
    }
    by_year
        .into_iter()
        .map(|(year, values)| {
            let n = values.len();
            let mean = stats::mean(&values).expect("nonempty year");
            let stderr = stats::sample_sd(&values).map_or(0.0, |sd| sd / (n as f64).sqrt());
            TimeSeriesPoint { year, mean, stderr, n, dataset, topic, metric, degenerate: n == 1 }
        })
        .collect()
}

pub const SERIES_HEADER: [&str; 7] = ["year", "dataset", "topic", "metric", "mean", "stderr", "n"];

pub fn render_series(points: &[TimeSeriesPoint]) -> String {
    let mut out = tsv::row(SERIES_HEADER);
    for p in points {
        out.push_str(&tsv::row([
            p.year.to_string(),
            p.dataset.to_string(),
            p.topic.map_or_else(|| "all".to_string(), |t| t.to_string()),
            p.metric.to_string(),
            p.mean.to_string(),
            p.stderr.to_string(),
            p.n.to_string(),
        ]));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementOdds {
    pub odds: OddsRatio,
    pub top_improved: u64,
    pub top_not_improved: u64,
    pub random_improved: u64,
    pub random_not_improved: u64,
    /// Pages with fewer than two defined scores, left out.
    pub skipped_pages: usize,
}

/// Whether the last defined score is below the first; `None` when the page
/// has fewer than two defined scores.
pub fn improved(page: &ScoredPage, metric: Metric) -> Option<bool> {
    let mut defined = page.scores.iter().filter_map(|s| metric.of(s));
    let first = defined.next()?;
    let last = defined.next_back()?;
    Some(last < first)
}

/// Odds of improvement in `top` over `random`.
pub fn odds_ratio_improvement(top: &[ScoredPage], random: &[ScoredPage], metric: Metric) -> Result<ImprovementOdds, MetricsError> {
    let mut skipped = 0;
    let mut tally = |pages: &[ScoredPage], name: &'static str| -> Result<(u64, u64), MetricsError> {
        let (mut yes, mut no) = (0u64, 0u64);
        for p in pages {
            match improved(p, metric) {
                Some(true) => yes += 1,
                Some(false) => no += 1,
                None => skipped += 1,
            }
        }
        if yes + no == 0 {
            return Err(MetricsError::NoComparablePages(name));
        }
        Ok((yes, no))
    };
    let (a, b) = tally(top, "top")?;
    let (c, d) = tally(random, "random")?;
    Ok(ImprovementOdds {
        odds: stats::odds_ratio(a, b, c, d),
        top_improved: a,
        top_not_improved: b,
        random_improved: c,
        random_not_improved: d,
        skipped_pages: skipped,
    })
}
