//! Perennial sources list: risky-domain lookup, lifespan of risky
//! references around their classification, and list coverage.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PageRecord;
use crate::ingest::ReferenceOccurrence;
use crate::stats::Ecdf;
use crate::wikitext::{parse_article, ParseConfig};

#[derive(Debug, Error)]
pub enum PerennialError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("domain `{0}` is deprecated/blacklisted but has no classification date")]
    MissingClassification(String),
    #[error("coverage of an empty corpus is undefined")]
    EmptyCorpus,
    #[error("revision {0} has no wikitext")]
    MissingWikitext(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerennialLabel {
    GenerallyReliable,
    NonConsensus,
    GenerallyUnreliable,
    Deprecated,
    Blacklisted,
}

impl PerennialLabel {
    /// Deprecated and blacklisted sources are unusable in any context.
    pub fn is_risky(self) -> bool {
        matches!(self, PerennialLabel::Deprecated | PerennialLabel::Blacklisted)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PerennialLabel::GenerallyReliable => "generally_reliable",
            PerennialLabel::NonConsensus => "non_consensus",
            PerennialLabel::GenerallyUnreliable => "generally_unreliable",
            PerennialLabel::Deprecated => "deprecated",
            PerennialLabel::Blacklisted => "blacklisted",
        }
    }
}

impl fmt::Display for PerennialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerennialLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.to_ascii_lowercase().chars().filter(char::is_ascii_alphabetic).collect();
        match key.as_str() {
            "generallyreliable" | "reliable" => Ok(PerennialLabel::GenerallyReliable),
            "nonconsensus" | "noconsensus" => Ok(PerennialLabel::NonConsensus),
            "generallyunreliable" | "unreliable" => Ok(PerennialLabel::GenerallyUnreliable),
            "deprecated" => Ok(PerennialLabel::Deprecated),
            "blacklisted" | "blocklisted" | "spamblacklist" => Ok(PerennialLabel::Blacklisted),
            _ => Err(format!("unknown perennial label `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerennialEntry {
    pub label: PerennialLabel,
    pub classified_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerennialList {
    entries: BTreeMap<String, PerennialEntry>,
    pub snapshot_date: DateTime<Utc>,
}

/// Candidate list keys for a host, longest first: `a.b.c`, `b.c`, `c`.
fn suffixes(host: &str) -> impl Iterator<Item = &str> {
    std::iter::successors(Some(host), |h| h.split_once('.').map(|(_, rest)| rest))
}

fn parse_instant(s: &str) -> Result<DateTime<Utc>, String> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| format!("bad ISO-8601 instant `{s}`"))
}

impl PerennialList {
    pub fn new(
        entries: impl IntoIterator<Item = (String, PerennialEntry)>,
        snapshot_date: DateTime<Utc>,
    ) -> Result<Self, PerennialError> {
        let mut map = BTreeMap::new();
        for (domain, entry) in entries {
            let domain = domain.trim().trim_start_matches("www.").to_ascii_lowercase();
            if entry.label.is_risky() && entry.classified_at.is_none() {
                return Err(PerennialError::MissingClassification(domain));
            }
            map.insert(domain, entry);
        }
        Ok(PerennialList { entries: map, snapshot_date })
    }

    /// Tab-separated `domain, label, classified_at` (ISO-8601 or `-`). A
    /// `# snapshot_date: <instant>` comment sets the snapshot date; it
    /// defaults to the latest classification date.
    pub fn parse(text: &str) -> Result<Self, PerennialError> {
        let mut snapshot = None;
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim_end_matches('\r');
            if let Some(comment) = raw.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("snapshot_date:") {
                    snapshot = Some(parse_instant(v).map_err(|message| PerennialError::Parse { line, message })?);
                }
                continue;
            }
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(PerennialError::Parse { line, message: format!("expected 3 fields, got {}", fields.len()) });
            }
            if line == 1 && fields[0].eq_ignore_ascii_case("domain") {
                continue;
            }
            let label: PerennialLabel = fields[1].parse().map_err(|message| PerennialError::Parse { line, message })?;
            let classified_at = match fields[2] {
                "-" | "" => None,
                v => Some(parse_instant(v).map_err(|message| PerennialError::Parse { line, message })?),
            };
            if label.is_risky() && classified_at.is_none() {
                return Err(PerennialError::Parse {
                    line,
                    message: format!("{label} domain `{}` needs a classification date", fields[0]),
                });
            }
            entries.push((fields[0].to_string(), PerennialEntry { label, classified_at }));
        }
        let snapshot = snapshot
            .or_else(|| entries.iter().filter_map(|(_, e)| e.classified_at).max())
            .unwrap_or(DateTime::<Utc>::UNIX_EPOCH);
        Self::new(entries, snapshot)
    }

    pub fn load(path: &Path) -> Result<Self, PerennialError> {
        let text = std::fs::read_to_string(path).map_err(|source| PerennialError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &PerennialEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn get(&self, domain: &str) -> Option<&PerennialEntry> {
        self.entries.get(domain)
    }

    /// Longest listed suffix of `host`.
    pub fn lookup(&self, host: &str) -> Option<(&str, &PerennialEntry)> {
        suffixes(host).find_map(|s| self.entries.get_key_value(s)).map(|(k, v)| (k.as_str(), v))
    }

    /// Longest listed suffix of `host` that carries a risky label.
    pub fn risky_match(&self, host: &str) -> Option<(&str, &PerennialEntry)> {
        suffixes(host)
            .filter_map(|s| self.entries.get_key_value(s))
            .find(|(_, e)| e.label.is_risky())
            .map(|(k, v)| (k.as_str(), v))
    }

    pub fn domains(&self) -> DomainSet {
        DomainSet::new(self.entries.keys().cloned())
    }

    pub fn risky_domains(&self) -> DomainSet {
        DomainSet::new(self.entries.iter().filter(|(_, e)| e.label.is_risky()).map(|(k, _)| k.clone()))
    }
}

/// Whether `domain` (a normalized host) falls under a deprecated or
/// blacklisted list entry. Any risky suffix counts, so a more specific
/// non-risky entry never masks a risky parent.
pub fn is_risky(domain: &str, list: &PerennialList) -> bool {
    list.risky_match(domain).is_some()
}

/// A plain set of domains matched by host suffix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainSet(BTreeSet<String>);

impl DomainSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(domains: I) -> Self {
        DomainSet(
            domains
                .into_iter()
                .map(|d| d.into().trim().trim_start_matches("www.").to_ascii_lowercase())
                .filter(|d| !d.is_empty())
                .collect(),
        )
    }

    /// One domain per line, `#` comments.
    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn load(path: &Path) -> Result<Self, PerennialError> {
        std::fs::read_to_string(path).map(|t| Self::parse(&t)).map_err(|source| PerennialError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, domain: &str) -> bool {
        self.0.contains(domain)
    }

    pub fn matches(&self, host: &str) -> bool {
        suffixes(host).any(|s| self.0.contains(s))
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

/// Percentage of pages citing at least one domain of `list`.
///
/// With a cutoff each page is evaluated at its last revision strictly
/// before the cutoff, and pages with no such revision are left out of the
/// denominator; otherwise the latest revision is used.
pub fn coverage(corpus: &[PageRecord], list: &DomainSet, cutoff: Option<DateTime<Utc>>) -> Result<f64, PerennialError> {
    if corpus.is_empty() {
        return Err(PerennialError::EmptyCorpus);
    }
    let cfg = ParseConfig::default();
    let mut pages = 0usize;
    let mut hits = 0usize;
    for page in corpus {
        let rev = match cutoff {
            Some(c) => page.revisions.iter().rev().find(|r| r.timestamp < c),
            None => page.revisions.last(),
        };
        let Some(rev) = rev else { continue };
        pages += 1;
        if list.is_empty() {
            continue;
        }
        let text = rev.wikitext.as_deref().ok_or(PerennialError::MissingWikitext(rev.revision_id))?;
        if parse_article(text, &cfg).references.iter().any(|r| list.matches(&r.host)) {
            hits += 1;
        }
    }
    if pages == 0 {
        return Err(PerennialError::EmptyCorpus);
    }
    Ok(100.0 * hits as f64 / pages as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LifespanGroup {
    Before,
    After,
}

impl fmt::Display for LifespanGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LifespanGroup::Before => "before",
            LifespanGroup::After => "after",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifespanSample {
    pub occurrence: ReferenceOccurrence,
    pub lifespan_days: f64,
    pub group: LifespanGroup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub ecdf: Ecdf,
    /// Lower quantiles; `None` for an empty group.
    pub median: Option<f64>,
    pub p75: Option<f64>,
}

impl GroupSummary {
    fn new(lifespans: &[f64]) -> Self {
        let ecdf = Ecdf::new(lifespans);
        GroupSummary { median: ecdf.quantile_lower(0.5), p75: ecdf.quantile_lower(0.75), ecdf }
    }

    pub fn n(&self) -> usize {
        self.ecdf.len()
    }

    /// Sorted lifespans in days.
    pub fn lifespans(&self) -> &[f64] {
        self.ecdf.samples()
    }

    pub fn is_defined(&self) -> bool {
        !self.ecdf.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifespanReport {
    pub window_days: i64,
    pub samples: Vec<LifespanSample>,
    pub before: GroupSummary,
    pub after: GroupSummary,
    /// Occurrences without a classification date.
    pub unclassified: usize,
}

impl LifespanReport {
    /// `median(before) / median(after)`.
    pub fn median_drop(&self) -> Option<f64> {
        match (self.before.median, self.after.median) {
            (Some(b), Some(a)) if a > 0.0 => Some(b / a),
            _ => None,
        }
    }

    pub fn group(&self, g: LifespanGroup) -> &GroupSummary {
        match g {
            LifespanGroup::Before => &self.before,
            LifespanGroup::After => &self.after,
        }
    }
}

pub fn lifespan_days(added: DateTime<Utc>, removed: DateTime<Utc>) -> f64 {
    (removed - added).num_seconds() as f64 / 86_400.0
}

/// Lifespans of risky references removed within `window_days` before their
/// domain's classification, and of those added within `window_days` after
/// it (and since removed).
///
/// Never-removed occurrences and domains in `exclusions` are dropped. An
/// occurrence spanning the classification instant belongs to neither group.
pub fn lifespan_analysis(
    history: &[ReferenceOccurrence],
    window_days: i64,
    exclusions: &HashSet<String>,
) -> LifespanReport {
    let window = Duration::days(window_days);
    let mut samples = Vec::new();
    let mut unclassified = 0;
    for occ in history {
        if exclusions.contains(&occ.domain) {
            continue;
        }
        let Some(classified) = occ.classified_at else {
            unclassified += 1;
            continue;
        };
        let Some(removed) = occ.removed_at else { continue };
        let group = if removed >= classified - window && removed < classified {
            LifespanGroup::Before
        } else if occ.added_at >= classified && occ.added_at <= classified + window {
            LifespanGroup::After
        } else {
            continue;
        };
        samples.push(LifespanSample {
            lifespan_days: lifespan_days(occ.added_at, removed),
            occurrence: occ.clone(),
            group,
        });
    }
    let collect = |g: LifespanGroup| -> Vec<f64> {
        samples.iter().filter(|s| s.group == g).map(|s| s.lifespan_days).collect()
    };
    let before = GroupSummary::new(&collect(LifespanGroup::Before));
    let after = GroupSummary::new(&collect(LifespanGroup::After));
    if !before.is_defined() || !after.is_defined() {
        log::warn!("lifespan analysis has an empty group; its quantiles are undefined");
    }
    LifespanReport { window_days, samples, before, after, unclassified }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(s: &str) -> DateTime<Utc> {
        parse_instant(s).unwrap()
    }

    fn fixture_list() -> PerennialList {
        PerennialList::parse(
            "domain\tlabel\tclassified_at\n\
             # snapshot_date: 2021-09-01T00:00:00Z\n\
             naturalnews.com\tblacklisted\t2018-06-01\n\
             dailystar.co.uk\tdeprecated\t2019-02-01T00:00:00Z\n\
             bbc.com\tgenerally_reliable\t-\n\
             baidu.com\tgenerally_unreliable\t-\n\
             baike.baidu.com\tdeprecated\t2020-01-01\n",
        )
        .unwrap()
    }

    #[test]
    fn risky_lookup() {
        let l = fixture_list();
        assert!(is_risky("naturalnews.com", &l));
        assert!(!is_risky("bbc.com", &l));
        assert!(is_risky("news.naturalnews.com", &l));
        assert!(is_risky("baike.baidu.com", &l));
        assert!(!is_risky("news.baidu.com", &l));
        assert!(!is_risky("example.org", &l));
        assert_eq!(l.snapshot_date, ts("2021-09-01T00:00:00Z"));
        assert_eq!(l.lookup("m.baike.baidu.com").unwrap().0, "baike.baidu.com");
    }

    #[test]
    fn risky_label_requires_date() {
        assert!(PerennialList::parse("x.com\tdeprecated\t-\n").is_err());
        assert!(PerennialList::parse("x.com\tmaybe\t-\n").is_err());
    }

    proptest! {
        #[test]
        fn risk_is_monotone_under_list_growth(
            base in prop::collection::vec(("[a-d]{1,2}\\.(com|org)", 0usize..5), 0..8),
            extra in prop::collection::vec(("([a-d]{1,2}\\.)?[a-d]{1,2}\\.(com|org)", 0usize..5), 1..6),
            host in "([a-d]{1,2}\\.)?[a-d]{1,2}\\.(com|org)",
        ) {
            const LABELS: [PerennialLabel; 5] = [
                PerennialLabel::GenerallyReliable, PerennialLabel::NonConsensus,
                PerennialLabel::GenerallyUnreliable, PerennialLabel::Deprecated, PerennialLabel::Blacklisted,
            ];
            let entry = |i: usize| PerennialEntry { label: LABELS[i], classified_at: Some(DateTime::<Utc>::UNIX_EPOCH) };
            let small = PerennialList::new(base.iter().map(|(d, i)| (d.clone(), entry(*i))), DateTime::<Utc>::UNIX_EPOCH).unwrap();
            // growth adds new domains only
            let mut grown_entries: BTreeMap<String, PerennialEntry> = base.iter().map(|(d, i)| (d.clone(), entry(*i))).collect();
            for (d, i) in &extra {
                grown_entries.entry(d.clone()).or_insert(entry(*i));
            }
            let big = PerennialList::new(grown_entries, DateTime::<Utc>::UNIX_EPOCH).unwrap();
            if is_risky(&host, &small) {
                prop_assert!(is_risky(&host, &big));
            }
        }
    }

    fn occ(domain: &str, added: &str, removed: Option<&str>, classified: &str) -> ReferenceOccurrence {
        ReferenceOccurrence {
            page_id: 1,
            domain: domain.to_string(),
            added_at: ts(added),
            removed_at: removed.map(ts),
            label: Some(PerennialLabel::Deprecated),
            classified_at: Some(ts(classified)),
        }
    }

    #[test]
    fn window_rules() {
        let c = "2019-01-01T00:00:00Z";
        let history = vec![
            // removed 10 days before classification
            occ("a.com", "2018-12-01T00:00:00Z", Some("2018-12-22T00:00:00Z"), c),
            // added after, removed 5 days later
            occ("a.com", "2019-02-01T00:00:00Z", Some("2019-02-06T00:00:00Z"), c),
            // spans classification: neither
            occ("a.com", "2018-12-30T00:00:00Z", Some("2019-01-05T00:00:00Z"), c),
            // censored
            occ("a.com", "2019-03-01T00:00:00Z", None, c),
            // outside the window
            occ("a.com", "2020-03-01T00:00:00Z", Some("2020-03-02T00:00:00Z"), c),
            // added and removed at the same instant
            occ("a.com", "2019-04-01T00:00:00Z", Some("2019-04-01T00:00:00Z"), c),
        ];
        let r = lifespan_analysis(&history, 365, &HashSet::new());
        assert_eq!(r.before.lifespans(), [21.0]);
        assert_eq!(r.after.lifespans(), [0.0, 5.0]);
        assert_eq!(r.after.median, Some(0.0));
        let excluded: HashSet<String> = ["a.com".to_string()].into();
        let r = lifespan_analysis(&history, 365, &excluded);
        assert!(!r.before.is_defined() && r.before.median.is_none());
    }

    fn page(id: u64, revs: &[(&str, &str)]) -> PageRecord {
        PageRecord {
            page_id: id,
            title: id.to_string(),
            topics: Default::default(),
            meta_topic: None,
            revisions: revs
                .iter()
                .enumerate()
                .map(|(i, (t, text))| crate::corpus::RevisionRecord {
                    revision_id: id * 100 + i as u64,
                    page_id: id,
                    timestamp: ts(t),
                    editor_id: None,
                    is_anonymous: true,
                    is_bot: false,
                    is_minor: false,
                    byte_delta: 0,
                    prior_user_revision_count: 0,
                    comment: String::new(),
                    wikitext: Some(text.to_string()),
                })
                .collect(),
        }
    }

    #[test]
    fn coverage_counts_pages() {
        let mut corpus: Vec<PageRecord> = (0..8).map(|i| page(i, &[("2017-01-01T00:00:00Z", "Plain.<ref>http://ok.org</ref>")])).collect();
        corpus.push(page(8, &[("2017-01-01T00:00:00Z", "X.<ref>http://news.naturalnews.com/a</ref>")]));
        corpus.push(page(9, &[("2017-01-01T00:00:00Z", "Y.<ref>{{cite web|url=https://dailystar.co.uk/b}}</ref>")]));
        let risky = fixture_list().risky_domains();
        assert_eq!(coverage(&corpus, &risky, None).unwrap(), 20.0);
        assert_eq!(coverage(&corpus, &DomainSet::default(), None).unwrap(), 0.0);
        assert!(coverage(&[], &risky, None).is_err());
    }

    #[test]
    fn coverage_cutoff_picks_last_revision_before() {
        let corpus = vec![page(1, &[
            ("2017-01-01T00:00:00Z", "A.<ref>http://naturalnews.com/x</ref>"),
            ("2019-01-01T00:00:00Z", "A cleaned."),
        ])];
        let risky = fixture_list().risky_domains();
        assert_eq!(coverage(&corpus, &risky, Some(ts("2018-01-01T00:00:00Z"))).unwrap(), 100.0);
        assert_eq!(coverage(&corpus, &risky, None).unwrap(), 0.0);
        assert!(coverage(&corpus, &risky, Some(ts("2016-01-01T00:00:00Z"))).is_err());
    }
}
