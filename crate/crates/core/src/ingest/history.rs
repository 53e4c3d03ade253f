use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PageRecord;
use crate::perennial::{PerennialLabel, PerennialList};
use crate::tsv;
use crate::wikitext::{parse_article, ParseConfig};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("revision {revision_id} of page {page_id} has no wikitext")]
    MissingWikitext { page_id: u64, revision_id: u64 },
}

/// Presence interval of a listed domain on a page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceOccurrence {
    pub page_id: u64,
    pub domain: String,
    pub added_at: DateTime<Utc>,
    /// Absent while the reference is still on the page.
    pub removed_at: Option<DateTime<Utc>>,
    pub label: Option<PerennialLabel>,
    pub classified_at: Option<DateTime<Utc>>,
}

pub fn build_reference_history(
    corpus: &[PageRecord],
    list: &PerennialList,
) -> Result<Vec<ReferenceOccurrence>, IngestError> {
    build_reference_history_with(corpus, list, &ParseConfig::default())
}

/// Occurrence intervals of every list-matched domain, sorted by
/// `(page_id, domain, added_at)`.
///
/// A cited host is attributed to its list entry (a risky matching suffix
/// first, otherwise the longest matching one). An occurrence opens at the
/// first revision citing the entry and closes at the timestamp of the first
/// later revision that no longer does.
pub fn build_reference_history_with(
    corpus: &[PageRecord],
    list: &PerennialList,
    cfg: &ParseConfig,
) -> Result<Vec<ReferenceOccurrence>, IngestError> {
    let per_page: Vec<Vec<ReferenceOccurrence>> =
        corpus.par_iter().map(|page| page_history(page, list, cfg)).collect::<Result<_, _>>()?;
    let mut all: Vec<ReferenceOccurrence> = per_page.into_iter().flatten().collect();
    all.sort_by(|a, b| (a.page_id, &a.domain, a.added_at).cmp(&(b.page_id, &b.domain, b.added_at)));
    Ok(all)
}

fn page_history(page: &PageRecord, list: &PerennialList, cfg: &ParseConfig) -> Result<Vec<ReferenceOccurrence>, IngestError> {
    let mut open: BTreeMap<String, DateTime<Utc>> = BTreeMap::new();
    let mut out = Vec::new();
    let occurrence = |domain: &str, added_at, removed_at| {
        let entry = list.get(domain);
        ReferenceOccurrence {
            page_id: page.page_id,
            domain: domain.to_string(),
            added_at,
            removed_at,
            label: entry.map(|e| e.label),
            classified_at: entry.and_then(|e| e.classified_at),
        }
    };
    for rev in &page.revisions {
        let text = rev
            .wikitext
            .as_deref()
            .ok_or(IngestError::MissingWikitext { page_id: page.page_id, revision_id: rev.revision_id })?;
        let present: BTreeSet<String> = parse_article(text, cfg)
            .references
            .iter()
            .filter_map(|r| list.risky_match(&r.host).or_else(|| list.lookup(&r.host)).map(|(d, _)| d.to_string()))
            .collect();
        let closed: Vec<String> = open.keys().filter(|d| !present.contains(*d)).cloned().collect();
        for d in closed {
            let added = open.remove(&d).expect("open occurrence");
            out.push(occurrence(&d, added, Some(rev.timestamp)));
        }
        for d in present {
            open.entry(d).or_insert(rev.timestamp);
        }
    }
    for (d, added) in open {
        out.push(occurrence(&d, added, None));
    }
    Ok(out)
}

/// TSV with header; instants in ISO-8601 UTC, blanks as `-`.
pub fn render_history(history: &[ReferenceOccurrence]) -> String {
    let instant = |t: Option<DateTime<Utc>>| t.map_or("-".to_string(), |t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string());
    let mut out = tsv::row(["page_id", "domain", "added_at", "removed_at", "label", "classified_at"]);
    for o in history {
        out.push_str(&tsv::row([
            o.page_id.to_string(),
            o.domain.clone(),
            instant(Some(o.added_at)),
            instant(o.removed_at),
            o.label.map_or("-".to_string(), |l| l.to_string()),
            instant(o.classified_at),
        ]));
    }
    out
}
