use std::collections::HashMap;
use std::path::Path;

use super::NeedError;
use crate::wikitext::Sentence;

/// Token placeholder for purely numeric tokens.
pub const NUM_TOKEN: &str = "<num>";

/// Word vectors in the plain text layout: a `count d` header, then one
/// `token v1 .. vd` line per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize, entries: HashMap<String, Vec<f64>>) -> Result<Self, NeedError> {
        if dimension == 0 {
            return Err(NeedError::Parse { line: 0, message: "dimension must be positive".into() });
        }
        if let Some((token, v)) = entries.iter().find(|(_, v)| v.len() != dimension) {
            return Err(NeedError::Dimension { expected: dimension, got: v.len(), context: format!("token `{token}`") });
        }
        Ok(EmbeddingTable { dimension, entries })
    }

    pub fn parse(text: &str) -> Result<Self, NeedError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(NeedError::Parse { line: 1, message: "missing header".into() })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || NeedError::Parse { line: 1, message: format!("expected `count d`, got `{header}`") };
        if head.len() != 2 {
            return Err(bad_header());
        }
        let count: usize = head[0].parse().map_err(|_| bad_header())?;
        let dimension: usize = head[1].parse().map_err(|_| bad_header())?;
        let mut entries = HashMap::with_capacity(count);
        for (idx, line) in lines {
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("nonblank line");
            let v: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| NeedError::Parse { line: idx + 1, message: e.to_string() })?;
            if v.len() != dimension {
                return Err(NeedError::Parse {
                    line: idx + 1,
                    message: format!("expected {dimension} values, got {}", v.len()),
                });
            }
            if entries.insert(token.to_string(), v).is_some() {
                return Err(NeedError::Parse { line: idx + 1, message: format!("duplicate token `{token}`") });
            }
        }
        if entries.len() != count {
            log::warn!("embedding header announces {count} tokens, file has {}", entries.len());
        }
        Self::new(dimension, entries)
    }

    pub fn load(path: &Path) -> Result<Self, NeedError> {
        Self::parse(&super::read(path)?)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    /// Mean of the token vectors; OOV tokens count as zero vectors.
    pub fn mean_vector<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dimension];
        if tokens.is_empty() {
            return acc;
        }
        for t in tokens {
            if let Some(v) = self.entries.get(t.as_ref()) {
                acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
            }
        }
        let n = tokens.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// `(sentence vector, section vector)`.
    pub fn embed_text(&self, sentence: &str, section_title: &str) -> (Vec<f64>, Vec<f64>) {
        (self.mean_vector(&tokenize(sentence)), self.mean_vector(&tokenize(section_title)))
    }
}

/// Lowercased alphanumeric runs; all-digit tokens become [`NUM_TOKEN`].
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            if t.bytes().all(|b| b.is_ascii_digit()) {
                NUM_TOKEN.to_string()
            } else {
                t.to_lowercase()
            }
        })
        .collect()
}

pub fn embed(sentence: &Sentence, table: &EmbeddingTable) -> (Vec<f64>, Vec<f64>) {
    table.embed_text(&sentence.text, &sentence.section_title)
}
