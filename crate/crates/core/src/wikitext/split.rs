//! Rule-based sentence boundary detection.

use std::collections::HashSet;
use std::ops::Range;

const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')', ']', '\u{bb}'];
const OPENERS: &[char] = &['"', '\'', '\u{201c}', '\u{2018}', '(', '\u{ab}'];

/// Byte spans of the sentences in `text`, trimmed of surrounding whitespace.
///
/// A boundary is a `.`, `!` or `?` (plus trailing closing quotes or
/// brackets) followed by whitespace and an uppercase letter, optionally
/// behind an opening quote. A period after a known abbreviation or a single
/// letter does not end a sentence, and no boundary falls inside a
/// `protected` span.
pub(crate) fn sentence_spans(text: &str, protected: &[Range<usize>], abbreviations: &HashSet<String>) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0usize;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut idx = 0;
    while idx < chars.len() {
        let (pos, c) = chars[idx];
        idx += 1;
        if !matches!(c, '.' | '!' | '?') || protected.iter().any(|r| r.contains(&pos)) {
            continue;
        }
        let mut j = idx;
        while j < chars.len() && (matches!(chars[j].1, '.' | '!' | '?') || CLOSERS.contains(&chars[j].1)) {
            j += 1;
        }
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        if k == j || k == chars.len() {
            continue;
        }
        let mut first = chars[k].1;
        if OPENERS.contains(&first) && k + 1 < chars.len() {
            first = chars[k + 1].1;
        }
        if !first.is_uppercase() {
            continue;
        }
        if c == '.' && is_abbreviation(&text[start..pos], abbreviations) {
            continue;
        }
        let end = chars.get(j).map_or(text.len(), |x| x.0);
        push_trimmed(text, start..end, &mut spans);
        start = chars[k].0;
        idx = k;
    }
    push_trimmed(text, start..text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, r: Range<usize>, spans: &mut Vec<Range<usize>>) {
    let slice = &text[r.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead + trail < slice.len() {
        spans.push(r.start + lead..r.end - trail);
    }
}

/// Whether the word right before a period is an abbreviation or initial.
fn is_abbreviation(before: &str, abbreviations: &HashSet<String>) -> bool {
    let word = before
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("");
    if word.is_empty() {
        return false;
    }
    let lower = word.to_lowercase();
    if abbreviations.contains(&lower) {
        return true;
    }
    let mut letters = lower.chars();
    // single initial ("J.") or dotted initialism ("U.S")
    matches!((letters.next(), letters.next()), (Some(a), None) if a.is_alphabetic())
        || (lower.contains('.') && lower.split('.').all(|p| p.chars().count() == 1))
}
