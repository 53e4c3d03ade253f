//! Citation-need scoring: mean word embeddings of a sentence and its
//! section title fed to a pluggable scorer, thresholded into a label.

mod embedding;
mod model;
mod store;

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

pub use embedding::{embed, tokenize, EmbeddingTable, NUM_TOKEN};
pub use model::{LogisticNeedModel, NeedModel};
pub use store::{needing_rows, render as render_rows, NeedRow, NeedStore, HEADER as STORE_HEADER};

use crate::stats::logistic::LogisticError;
use crate::wikitext::{Position, Sentence};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Ridge penalty used to train the bundled model.
pub const BUNDLED_RIDGE: f64 = 0.05;

const BUNDLED_EMBEDDINGS: &str = include_str!("../../data/cue_embeddings.vec");
const BUNDLED_MODEL: &str = include_str!("../../data/need_model.txt");
pub const BUNDLED_TRAINING: &str = include_str!("../../data/need_training.tsv");

#[derive(Debug, Error)]
pub enum NeedError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize, context: String },
    #[error("threshold {0} is outside (0, 1)")]
    Threshold(f64),
    #[error("training failed: {0}")]
    Train(#[from] LogisticError),
}

pub(crate) fn read(path: &Path) -> Result<String, NeedError> {
    std::fs::read_to_string(path).map_err(|source| NeedError::Io { path: path.display().to_string(), source })
}

/// Writes via a temp file in the same directory and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), NeedError> {
    let io = |source| NeedError::Io { path: path.display().to_string(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn validate_threshold(threshold: f64) -> Result<(), NeedError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(NeedError::Threshold(threshold))
    }
}

/// `y = 1` iff `y_hat >= threshold`.
pub fn label(y_hat: f64, threshold: f64) -> Result<bool, NeedError> {
    validate_threshold(threshold)?;
    Ok(y_hat >= threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeedScore {
    pub position: Position,
    pub y_hat: f64,
    pub y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSentence {
    pub sentence: Sentence,
    pub y_hat: f64,
    pub y: bool,
}

impl LabeledSentence {
    pub fn score(&self) -> NeedScore {
        NeedScore { position: self.sentence.position, y_hat: self.y_hat, y: self.y }
    }
}

/// An embedding table paired with a model of matching dimension.
pub struct Scorer<M: NeedModel = LogisticNeedModel> {
    table: EmbeddingTable,
    model: M,
}

impl<M: NeedModel> Scorer<M> {
    pub fn new(table: EmbeddingTable, model: M) -> Result<Self, NeedError> {
        if table.dimension() != model.dimension() {
            return Err(NeedError::Dimension {
                expected: model.dimension(),
                got: table.dimension(),
                context: "embedding table vs model".into(),
            });
        }
        validate_threshold(model.threshold())?;
        Ok(Scorer { table, model })
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn score_sentence(&self, sentence: &Sentence) -> Result<f64, NeedError> {
        let (s, t) = embed(sentence, &self.table);
        self.model.score(&s, &t)
    }

    pub fn label_sentences(&self, sentences: Vec<Sentence>) -> Result<Vec<LabeledSentence>, NeedError> {
        sentences
            .into_iter()
            .map(|sentence| {
                let y_hat = self.score_sentence(&sentence)?;
                let y = label(y_hat, self.model.threshold())?;
                Ok(LabeledSentence { sentence, y_hat, y })
            })
            .collect()
    }
}

impl Scorer<LogisticNeedModel> {
    /// Bundled cue table and logistic model.
    pub fn bundled() -> Self {
        Scorer { table: bundled_table().clone(), model: bundled_model().clone() }
    }

    pub fn with_threshold(self, threshold: f64) -> Result<Self, NeedError> {
        Ok(Scorer { table: self.table, model: self.model.with_threshold(threshold)? })
    }
}

pub fn bundled_table() -> &'static EmbeddingTable {
    static TABLE: OnceLock<EmbeddingTable> = OnceLock::new();
    TABLE.get_or_init(|| EmbeddingTable::parse(BUNDLED_EMBEDDINGS).expect("bundled embeddings parse"))
}

pub fn bundled_model() -> &'static LogisticNeedModel {
    static MODEL: OnceLock<LogisticNeedModel> = OnceLock::new();
    MODEL.get_or_init(|| LogisticNeedModel::parse(BUNDLED_MODEL).expect("bundled model parses"))
}

/// `label, section, sentence` rows with an optional header.
pub fn parse_training(text: &str) -> Result<Vec<(bool, String, String)>, NeedError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (idx == 0 && line.starts_with("label\t")) {
            continue;
        }
        let f: Vec<&str> = line.splitn(3, '\t').collect();
        let [y, section, sentence] = f[..] else {
            return Err(NeedError::Parse { line: idx + 1, message: "expected 3 columns".into() });
        };
        let y = match y {
            "1" => true,
            "0" => false,
            other => return Err(NeedError::Parse { line: idx + 1, message: format!("bad label `{other}`") }),
        };
        out.push((y, section.to_string(), sentence.to_string()));
    }
    Ok(out)
}

/// Trains a logistic model on labeled `(section, sentence)` examples.
pub fn train_from_examples(
    examples: &[(bool, String, String)],
    table: &EmbeddingTable,
    ridge: f64,
    threshold: f64,
) -> Result<LogisticNeedModel, NeedError> {
    let features: Vec<(Vec<f64>, Vec<f64>)> =
        examples.iter().map(|(_, section, sentence)| table.embed_text(sentence, section)).collect();
    let labels: Vec<bool> = examples.iter().map(|e| e.0).collect();
    Ok(LogisticNeedModel::train(&features, &labels, ridge, threshold)?.0)
}
