//! Pages, revisions and editors, plus the line-delimited corpus loader.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate revision_id {revision_id}")]
    DuplicateRevision { line: usize, revision_id: u64 },
    #[error("line {line}: {message}")]
    Invariant { line: usize, message: String },
    #[error("unknown corpus format `{0}` (expected `jsonl`)")]
    UnknownFormat(String),
    #[error("topics line {line}: {message}")]
    Topic { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line, one line per revision.
    JsonLines,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json-lines" => Ok(CorpusFormat::JsonLines),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

/// One logged edit of a page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionRecord {
    pub revision_id: u64,
    pub page_id: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub editor_id: Option<u64>,
    pub is_anonymous: bool,
    pub is_bot: bool,
    pub is_minor: bool,
    /// Size change in bytes against the previous revision.
    pub byte_delta: i64,
    pub prior_user_revision_count: u64,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub wikitext: Option<String>,
}

impl RevisionRecord {
    /// Registered, non-bot editor id.
    pub fn human_editor(&self) -> Option<u64> {
        if self.is_bot || self.is_anonymous {
            None
        } else {
            self.editor_id
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetaTopic {
    Culture,
    HistoryAndSociety,
    Geography,
    Stem,
}

impl MetaTopic {
    pub const ALL: [MetaTopic; 4] =
        [MetaTopic::Culture, MetaTopic::HistoryAndSociety, MetaTopic::Geography, MetaTopic::Stem];
}

impl fmt::Display for MetaTopic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetaTopic::Culture => "Culture",
            MetaTopic::HistoryAndSociety => "History and Society",
            MetaTopic::Geography => "Geography",
            MetaTopic::Stem => "STEM",
        })
    }
}

impl FromStr for MetaTopic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "culture" => Ok(MetaTopic::Culture),
            "historyandsociety" | "history" => Ok(MetaTopic::HistoryAndSociety),
            "geography" => Ok(MetaTopic::Geography),
            "stem" => Ok(MetaTopic::Stem),
            _ => Err(format!("unknown meta-topic `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRecord {
    pub page_id: u64,
    pub title: String,
    /// Second-level topic labels.
    pub topics: BTreeSet<String>,
    pub meta_topic: Option<MetaTopic>,
    /// Ascending by `(timestamp, revision_id)`.
    pub revisions: Vec<RevisionRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expertise {
    Expert,
    Novice,
    Middle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditorProfile {
    pub editor_id: u64,
    /// Latest observed prior-revision count.
    pub revision_count: u64,
    pub expertise: Expertise,
    pub exposed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EditorPartition {
    pub profiles: BTreeMap<u64, EditorProfile>,
    /// `(Q1, Q3)`; `None` when no eligible editor was found.
    pub quartiles: Option<(f64, f64)>,
}

impl EditorPartition {
    pub fn expertise(&self, editor_id: u64) -> Option<Expertise> {
        self.profiles.get(&editor_id).map(|p| p.expertise)
    }

    pub fn count(&self, expertise: Expertise) -> usize {
        self.profiles.values().filter(|p| p.expertise == expertise).count()
    }
}

#[derive(Deserialize)]
struct RecordLine {
    #[serde(flatten)]
    revision: RevisionRecord,
    #[serde(default)]
    page_title: Option<String>,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<PageRecord>, CorpusError> {
    let text = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        CorpusFormat::JsonLines => parse_jsonl(&String::from_utf8_lossy(&text)),
    }
}

/// Parses line-delimited revision records and groups them into pages.
pub fn parse_jsonl(text: &str) -> Result<Vec<PageRecord>, CorpusError> {
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut pages: BTreeMap<u64, (Option<String>, Vec<RevisionRecord>)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(raw).map_err(|e| CorpusError::Malformed {
            line,
            message: format!("column {}: {e}", e.column()),
        })?;
        let mut rev = rec.revision;
        if seen.insert(rev.revision_id, line).is_some() {
            return Err(CorpusError::DuplicateRevision { line, revision_id: rev.revision_id });
        }
        if rev.is_anonymous != rev.editor_id.is_none() {
            return Err(CorpusError::Invariant {
                line,
                message: format!(
                    "revision {}: is_anonymous={} but editor_id is {}",
                    rev.revision_id,
                    rev.is_anonymous,
                    if rev.editor_id.is_some() { "present" } else { "absent" }
                ),
            });
        }
        rev.timestamp = rev.timestamp.trunc_subsecs(0);
        let entry = pages.entry(rev.page_id).or_default();
        if entry.0.is_none() {
            entry.0 = rec.page_title;
        }
        entry.1.push(rev);
    }

    let mut out = Vec::with_capacity(pages.len());
    for (page_id, (title, mut revisions)) in pages {
        revisions.sort_by_key(|a| (a.timestamp, a.revision_id));
        if let Some(first) = revisions.first() {
            if let Some(text) = &first.wikitext {
                if first.byte_delta != text.len() as i64 {
                    return Err(CorpusError::Invariant {
                        line: seen[&first.revision_id],
                        message: format!(
                            "revision {} opens page {page_id} but byte_delta {} != size {}",
                            first.revision_id,
                            first.byte_delta,
                            text.len()
                        ),
                    });
                }
            }
        }
        out.push(PageRecord {
            page_id,
            title: title.unwrap_or_else(|| page_id.to_string()),
            topics: BTreeSet::new(),
            meta_topic: None,
            revisions,
        });
    }
    Ok(out)
}

/// `page_id -> [(topic, meta_topic)]` in file order.
pub type TopicTable = BTreeMap<u64, Vec<(String, MetaTopic)>>;

/// Reads the tab-separated `page_id, topic, meta_topic` file.
pub fn load_topics(path: &Path) -> Result<TopicTable, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_topics(&text)
}

pub fn parse_topics(text: &str) -> Result<TopicTable, CorpusError> {
    let mut table = TopicTable::new();
    let mut meta_of: HashMap<String, MetaTopic> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(CorpusError::Topic { line, message: format!("expected 3 fields, got {}", fields.len()) });
        }
        let Ok(page_id) = fields[0].trim().parse::<u64>() else {
            if line == 1 {
                // header row
                continue;
            }
            return Err(CorpusError::Topic { line, message: format!("bad page_id `{}`", fields[0]) });
        };
        let topic = fields[1].trim().to_string();
        let meta: MetaTopic = fields[2].parse().map_err(|message| CorpusError::Topic { line, message })?;
        if let Some(prev) = meta_of.insert(topic.clone(), meta) {
            if prev != meta {
                return Err(CorpusError::Topic {
                    line,
                    message: format!("topic `{topic}` mapped to both {prev} and {meta}"),
                });
            }
        }
        table.entry(page_id).or_default().push((topic, meta));
    }
    Ok(table)
}

/// Copies topic labels onto pages. A page's meta-topic is that of its first
/// listed topic.
pub fn attach_topics(pages: &mut [PageRecord], topics: &TopicTable) {
    for page in pages {
        if let Some(rows) = topics.get(&page.page_id) {
            page.topics = rows.iter().map(|(t, _)| t.clone()).collect();
            page.meta_topic = rows.first().map(|(_, m)| *m);
        }
    }
}

/// Splits registered human editors into experts (> Q3), novices (< Q1) and
/// the middle band, using each editor's latest observed prior-revision count.
pub fn partition_editors(corpus: &[PageRecord]) -> EditorPartition {
    let mut latest: HashMap<u64, (DateTime<Utc>, u64, u64)> = HashMap::new();
    for rev in corpus.iter().flat_map(|p| &p.revisions) {
        let Some(editor) = rev.human_editor() else { continue };
        let key = (rev.timestamp, rev.revision_id, rev.prior_user_revision_count);
        latest
            .entry(editor)
            .and_modify(|cur| {
                if (key.0, key.1) > (cur.0, cur.1) {
                    *cur = key;
                }
            })
            .or_insert(key);
    }
    if latest.is_empty() {
        log::warn!("no registered non-bot editors in corpus; expertise partition is empty");
        return EditorPartition::default();
    }
    let mut counts: Vec<f64> = latest.values().map(|v| v.2 as f64).collect();
    counts.sort_by(f64::total_cmp);
    let q1 = stats::quantile_linear(&counts, 0.25).expect("nonempty");
    let q3 = stats::quantile_linear(&counts, 0.75).expect("nonempty");
    let profiles = latest
        .into_iter()
        .map(|(editor_id, (_, _, count))| {
            let c = count as f64;
            let expertise = if c > q3 {
                Expertise::Expert
            } else if c < q1 {
                Expertise::Novice
            } else {
                Expertise::Middle
            };
            (editor_id, EditorProfile { editor_id, revision_count: count, expertise, exposed: false })
        })
        .collect();
    EditorPartition { profiles, quartiles: Some((q1, q3)) }
}

/// Distinct registered human editors in the corpus.
pub fn human_editors(corpus: &[PageRecord]) -> HashSet<u64> {
    corpus.iter().flat_map(|p| &p.revisions).filter_map(RevisionRecord::human_editor).collect()
}
