use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{LabeledSentence, NeedError};
use crate::tsv;
use crate::wikitext::Position;

pub const HEADER: [&str; 6] = ["revision_id", "section_title", "position", "y_hat", "sentence", "paragraph"];

#[derive(Debug, Clone, PartialEq)]
pub struct NeedRow {
    pub revision_id: u64,
    pub section_title: String,
    pub position: Position,
    pub y_hat: f64,
    pub sentence: String,
    pub paragraph: String,
}

impl NeedRow {
    pub fn from_labeled(revision_id: u64, s: &LabeledSentence) -> Self {
        NeedRow {
            revision_id,
            section_title: s.sentence.section_title.clone(),
            position: s.sentence.position,
            y_hat: s.y_hat,
            sentence: s.sentence.text.clone(),
            paragraph: s.sentence.paragraph.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        tsv::row([
            self.revision_id.to_string(),
            self.section_title.clone(),
            self.position.to_string(),
            format!("{:.6}", self.y_hat),
            self.sentence.clone(),
            self.paragraph.clone(),
        ])
    }

    fn parse_line(line: &str, lineno: usize) -> Result<Self, NeedError> {
        let err = |message: String| NeedError::Parse { line: lineno, message };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != HEADER.len() {
            return Err(err(format!("expected {} columns, got {}", HEADER.len(), f.len())));
        }
        Ok(NeedRow {
            revision_id: f[0].parse().map_err(|_| err(format!("bad revision id `{}`", f[0])))?,
            section_title: tsv::unescape(f[1]),
            position: f[2].parse().map_err(err)?,
            y_hat: f[3].parse().map_err(|_| err(format!("bad score `{}`", f[3])))?,
            sentence: tsv::unescape(f[4]),
            paragraph: tsv::unescape(f[5]),
        })
    }
}

/// Rows for sentences labeled as needing a citation.
pub fn needing_rows(revision_id: u64, labeled: &[LabeledSentence]) -> Vec<NeedRow> {
    labeled.iter().filter(|s| s.y).map(|s| NeedRow::from_labeled(revision_id, s)).collect()
}

pub fn render(rows: &[NeedRow]) -> String {
    let mut out = tsv::row(HEADER);
    for r in rows {
        out.push_str(&r.to_line());
    }
    out
}

/// TSV table of needing sentences keyed by `(revision_id, position)`.
///
/// Each upsert replaces the stored rows of the given revisions and rewrites
/// the file atomically, so a failed write leaves the previous table intact.
#[derive(Debug)]
pub struct NeedStore {
    path: PathBuf,
    rows: BTreeMap<(u64, Position), NeedRow>,
}

impl NeedStore {
    pub fn open(path: &Path) -> Result<Self, NeedError> {
        let mut rows = BTreeMap::new();
        if path.exists() {
            let text = super::read(path)?;
            for (idx, line) in text.lines().enumerate().skip(1) {
                if line.is_empty() {
                    continue;
                }
                let row = NeedRow::parse_line(line, idx + 1)?;
                rows.insert((row.revision_id, row.position), row);
            }
        }
        Ok(NeedStore { path: path.to_path_buf(), rows })
    }

    pub fn rows(&self) -> impl Iterator<Item = &NeedRow> {
        self.rows.values()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Stores the `y = 1` sentences of one revision; returns the row count.
    pub fn store_needing(&mut self, revision_id: u64, labeled: &[LabeledSentence]) -> Result<usize, NeedError> {
        self.upsert_many([(revision_id, labeled)])
    }

    pub fn upsert_many<'a, I>(&mut self, batches: I) -> Result<usize, NeedError>
    where
        I: IntoIterator<Item = (u64, &'a [LabeledSentence])>,
    {
        let mut next = self.rows.clone();
        let mut written = 0;
        for (revision_id, labeled) in batches {
            next.retain(|(rev, _), _| *rev != revision_id);
            for row in needing_rows(revision_id, labeled) {
                next.insert((revision_id, row.position), row);
                written += 1;
            }
        }
        let rows: Vec<NeedRow> = next.values().cloned().collect();
        super::write_atomic(&self.path, render(&rows).as_bytes())?;
        self.rows = next;
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wikitext::Sentence;

    fn labeled(i: usize, y: bool) -> LabeledSentence {
        LabeledSentence {
            sentence: Sentence {
                text: format!("Sentence\t{i}."),
                section_title: "History".into(),
                paragraph: "P".into(),
                paragraph_index: 0,
                has_citation: false,
                position: Position { section: 1, sentence: i },
            },
            y_hat: if y { 0.75 } else { 0.25 },
            y,
        }
    }

    #[test]
    fn upsert_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("need.tsv");
        let batch = vec![labeled(0, true), labeled(1, false), labeled(2, true)];
        let mut store = NeedStore::open(&path).unwrap();
        assert_eq!(store.store_needing(7, &[]).unwrap(), 0);
        assert!(store.is_empty());
        assert_eq!(store.store_needing(7, &batch).unwrap(), 2);
        let first = std::fs::read(&path).unwrap();
        store.store_needing(7, &batch).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
        let reopened = NeedStore::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
        assert!(reopened.rows().all(|r| r.revision_id == 7));
        assert_eq!(reopened.rows().next().unwrap().sentence, "Sentence\t0.");
    }

    #[test]
    fn failed_write_keeps_previous_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("need.tsv");
        let mut store = NeedStore::open(&path).unwrap();
        store.store_needing(1, &[labeled(0, true)]).unwrap();
        let before = std::fs::read(&path).unwrap();
        // replace the file's directory entry target with a directory to force failure
        let mut broken = NeedStore { path: dir.path().to_path_buf(), rows: store.rows.clone() };
        assert!(broken.store_needing(2, &[labeled(0, true)]).is_err());
        assert_eq!(broken.len(), 1);
        assert_eq!(std::fs::read(&path).unwrap(), before);
    }
}
