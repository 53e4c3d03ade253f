//! Article wikitext to sentences and referenced domains.
//!
//! [`parse_article`] does one pass over the markup and yields both views:
//! the scored sentences (with their inline-citation flag) and every cited
//! URL normalized to a domain. [`segment`] and [`extract_domains`] are the
//! two halves on their own.

mod markup;
mod split;
pub mod suffix;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use suffix::{normalize_host, normalize_url, DomainError, SuffixList};

/// Section title used for text before the first heading.
pub const LEAD_SECTION: &str = "MAIN_SECTION";

const BUNDLED_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");
const BUNDLED_EXCLUDED: &str = include_str!("../../data/excluded_sections.txt");

/// `(section index, sentence index within the section)`. Section 0 is the
/// lead; headings are counted in document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub section: usize,
    pub sentence: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.section, self.sentence)
    }
}

impl std::str::FromStr for Position {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("bad position `{s}`"))?;
        Ok(Position {
            section: a.parse().map_err(|_| format!("bad position `{s}`"))?,
            sentence: b.parse().map_err(|_| format!("bad position `{s}`"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    pub section_title: String,
    /// Text of the containing paragraph.
    pub paragraph: String,
    /// Index of the paragraph within its section.
    pub paragraph_index: usize,
    /// Inline citation present (the `c` flag).
    pub has_citation: bool,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedReference {
    pub raw_url: String,
    /// Full normalized host, used for suffix matching against source lists.
    pub host: String,
    /// Registrable domain of `host`.
    pub domain: String,
    pub sentence_position: Option<Position>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedArticle {
    pub sentences: Vec<Sentence>,
    pub references: Vec<ExtractedReference>,
    /// URLs that could not be normalized to a domain.
    pub unparseable_urls: usize,
}

/// Knobs for parsing: excluded sections, abbreviation guard, suffix rules.
#[derive(Debug, Clone)]
pub struct ParseConfig {
    excluded_sections: HashSet<String>,
    abbreviations: HashSet<String>,
    suffixes: Arc<SuffixList>,
}

fn plain_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl Default for ParseConfig {
    fn default() -> Self {
        static DEFAULT: OnceLock<ParseConfig> = OnceLock::new();
        DEFAULT
            .get_or_init(|| ParseConfig {
                excluded_sections: plain_lines(BUNDLED_EXCLUDED).map(str::to_lowercase).collect(),
                abbreviations: plain_lines(BUNDLED_ABBREVIATIONS).map(str::to_lowercase).collect(),
                suffixes: Arc::new(SuffixList::bundled().clone()),
            })
            .clone()
    }
}

impl ParseConfig {
    pub fn with_excluded_sections<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, titles: I) -> Self {
        self.excluded_sections = titles.into_iter().map(|t| t.as_ref().trim().to_lowercase()).collect();
        self
    }

    pub fn with_abbreviations<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, words: I) -> Self {
        self.abbreviations = words
            .into_iter()
            .map(|w| w.as_ref().trim().trim_end_matches('.').to_lowercase())
            .collect();
        self
    }

    pub fn with_suffixes(mut self, suffixes: SuffixList) -> Self {
        self.suffixes = Arc::new(suffixes);
        self
    }

    /// Plain-text lists: one entry per line, `#` comments.
    pub fn load_excluded_sections(self, path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(self.with_excluded_sections(plain_lines(&text)))
    }

    pub fn load_abbreviations(self, path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(self.with_abbreviations(plain_lines(&text)))
    }

    pub fn is_excluded(&self, title: &str) -> bool {
        self.excluded_sections.contains(&title.trim().to_lowercase())
    }

    pub fn suffixes(&self) -> &SuffixList {
        &self.suffixes
    }
}

fn heading_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(={1,6})\s*(.*?)\s*(={1,6})\s*$").expect("valid regex"))
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Default)]
struct Paragraph {
    text: String,
    /// `(offset in paragraph, absolute offset in cleaned text)`.
    markers: Vec<(usize, usize)>,
    protected: Vec<std::ops::Range<usize>>,
}

struct Section {
    title: String,
    excluded: bool,
    paragraphs: Vec<Paragraph>,
}

/// Splits cleaned text into sections and paragraphs, carrying marker and
/// protected offsets along.
fn sections(clean: &markup::Cleaned, cfg: &ParseConfig) -> Vec<Section> {
    let mut out = vec![Section { title: LEAD_SECTION.to_string(), excluded: false, paragraphs: Vec::new() }];
    let mut excluded_level: Option<usize> = None;
    let mut current = Paragraph::default();
    let mut marker_idx = 0;
    let mut offset = 0usize;

    fn flush(out: &mut [Section], current: &mut Paragraph) {
        if !current.text.trim().is_empty() {
            out.last_mut().expect("lead exists").paragraphs.push(std::mem::take(current));
        } else {
            *current = Paragraph::default();
        }
    }

    for raw_line in clean.text.split('\n') {
        let line_start = offset;
        let line_end = offset + raw_line.len();
        offset = line_end + 1;
        let line_markers: Vec<usize> = {
            let mut v = Vec::new();
            while marker_idx < clean.markers.len() && clean.markers[marker_idx] <= line_end {
                if clean.markers[marker_idx] >= line_start {
                    v.push(clean.markers[marker_idx]);
                }
                marker_idx += 1;
            }
            v
        };

        let trimmed = raw_line.trim();
        if let Some(caps) = heading_re().captures(trimmed) {
            let (open, title, close) = (&caps[1], caps[2].trim(), &caps[3]);
            if open.len() == close.len() && !title.is_empty() {
                flush(&mut out, &mut current);
                let level = open.len();
                if excluded_level.is_some_and(|l| level <= l) {
                    excluded_level = None;
                }
                if excluded_level.is_none() && cfg.is_excluded(title) {
                    excluded_level = Some(level);
                }
                out.push(Section {
                    title: collapse_ws(title),
                    excluded: excluded_level.is_some(),
                    paragraphs: Vec::new(),
                });
                continue;
            }
        }
        if trimmed.is_empty() {
            flush(&mut out, &mut current);
            continue;
        }
        if trimmed.starts_with(['|', '!', '{', '}']) || trimmed.starts_with("----") {
            continue;
        }
        let list_item = trimmed.starts_with(['*', '#', ':', ';']);
        if list_item {
            flush(&mut out, &mut current);
        }
        let body = trimmed.trim_start_matches(['*', '#', ':', ';']).trim_start();
        let body_start = line_end - raw_line.trim_start().len() + (trimmed.len() - body.len());
        let body_end = body_start + body.len();

        if !current.text.is_empty() && !body.is_empty() {
            current.text.push(' ');
        }
        let base = current.text.len();
        current.text.push_str(body);
        for m in line_markers {
            let local = m.clamp(body_start, body_end) - body_start;
            current.markers.push((base + local, m));
        }
        for r in &clean.protected {
            if r.start < body_end && r.end > body_start {
                let s = r.start.max(body_start) - body_start + base;
                let e = r.end.min(body_end) - body_start + base;
                current.protected.push(s..e);
            }
        }
        if list_item {
            flush(&mut out, &mut current);
        }
    }
    flush(&mut out, &mut current);
    out
}

/// Full parse: sentences with citation flags plus extracted references.
pub fn parse_article(wikitext: &str, cfg: &ParseConfig) -> ParsedArticle {
    let clean = markup::clean(wikitext);
    let mut sentences = Vec::new();
    let mut anchor_position: HashMap<usize, Position> = HashMap::new();

    for (section_idx, section) in sections(&clean, cfg).into_iter().enumerate() {
        if section.excluded {
            continue;
        }
        let mut sentence_idx = 0usize;
        for (paragraph_idx, para) in section.paragraphs.iter().enumerate() {
            let spans = split::sentence_spans(&para.text, &para.protected, &cfg.abbreviations);
            let paragraph = collapse_ws(&para.text);
            let mut local: Vec<(usize, Sentence)> = Vec::new();
            for span in spans {
                let text = collapse_ws(&para.text[span.clone()]);
                if !text.chars().any(char::is_alphanumeric) {
                    continue;
                }
                local.push((span.start, Sentence {
                    text,
                    section_title: section.title.clone(),
                    paragraph: paragraph.clone(),
                    paragraph_index: paragraph_idx,
                    has_citation: false,
                    position: Position { section: section_idx, sentence: sentence_idx },
                }));
                sentence_idx += 1;
            }
            for &(at, absolute) in &para.markers {
                // the last sentence starting before the marker owns it
                if let Some((_, s)) = local.iter_mut().rev().find(|(start, _)| *start < at) {
                    s.has_citation = true;
                    anchor_position.insert(absolute, s.position);
                }
            }
            sentences.extend(local.into_iter().map(|(_, s)| s));
        }
    }

    let mut references = Vec::with_capacity(clean.urls.len());
    let mut unparseable_urls = 0;
    for raw in clean.urls {
        match normalize_url(&raw.url, &cfg.suffixes) {
            Ok((host, domain)) => references.push(ExtractedReference {
                sentence_position: raw.anchor.and_then(|a| anchor_position.get(&a).copied()),
                raw_url: raw.url,
                host,
                domain,
            }),
            Err(_) => unparseable_urls += 1,
        }
    }
    ParsedArticle { sentences, references, unparseable_urls }
}

/// Sentences of an article with the default configuration.
pub fn segment(wikitext: &str) -> Vec<Sentence> {
    parse_article(wikitext, &ParseConfig::default()).sentences
}

/// As [`segment`], replacing invalid UTF-8 sequences.
pub fn segment_bytes(wikitext: &[u8]) -> Vec<Sentence> {
    segment(&String::from_utf8_lossy(wikitext))
}

/// Cited URLs normalized to domains, in document order. Duplicates are kept.
pub fn extract_domains(wikitext: &str) -> Vec<ExtractedReference> {
    parse_article(wikitext, &ParseConfig::default()).references
}

/// Resets each sentence's citation flag from the references attached to it.
pub fn attach_citations(sentences: &[Sentence], refs: &[ExtractedReference]) -> Vec<Sentence> {
    let cited: HashSet<Position> = refs.iter().filter_map(|r| r.sentence_position).collect();
    sentences
        .iter()
        .map(|s| Sentence { has_citation: cited.contains(&s.position), ..s.clone() })
        .collect()
}

/// Renders sentences back to markup-free text with their headings.
pub fn to_plain_text(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    let mut prev: Option<(usize, usize)> = None;
    for s in sentences {
        let key = (s.position.section, s.paragraph_index);
        match prev {
            Some((sec, _)) if sec != s.position.section => {
                out.push_str("\n\n");
                out.push_str(&format!("== {} ==\n", s.section_title));
            }
            Some(p) if p != key => out.push_str("\n\n"),
            Some(_) => out.push(' '),
            None if s.section_title != LEAD_SECTION || s.position.section != 0 => {
                out.push_str(&format!("== {} ==\n", s.section_title));
            }
            None => {}
        }
        out.push_str(&s.text);
        prev = Some(key);
    }
    out
}
