//! Single-pass markup stripper.
//!
//! Produces plain text (heading lines are kept verbatim so the caller can
//! split sections), the offsets where citation markers were removed, and
//! every URL that looks like a reference, in document order.

use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawUrl {
    pub url: String,
    /// Offset in the cleaned text of the citation marker this URL belongs
    /// to. `None` for bare links and for refs inside stripped blocks.
    pub anchor: Option<usize>,
}

#[derive(Debug, Default)]
pub(crate) struct Cleaned {
    pub text: String,
    pub markers: Vec<usize>,
    pub urls: Vec<RawUrl>,
    /// Link labels; sentence boundaries never fall inside these.
    pub protected: Vec<Range<usize>>,
}

#[derive(Clone, Copy)]
struct Mode {
    emit: bool,
    in_ref: bool,
    anchor: Option<usize>,
}

/// Tags whose content never reaches the prose.
const DROP_CONTENT: &[&str] = &[
    "math", "gallery", "syntaxhighlight", "source", "pre", "timeline", "score", "graph", "chem", "ce",
    "imagemap", "mapframe", "maplink", "templatedata", "templatestyles", "hiero", "poem", "inputbox",
];

const MEDIA_PREFIXES: &[&str] = &["file:", "image:", "category:", "media:"];

pub(crate) fn clean(src: &str) -> Cleaned {
    let mut s = Scanner { src, out: Cleaned::default() };
    s.run(0, src.len(), Mode { emit: true, in_ref: false, anchor: None });
    s.out
}

/// Whether a template name denotes an inline citation.
pub(crate) fn is_citation_template(name: &str) -> bool {
    const NOT_CITATIONS: &[&str] = &["citation needed", "citation needed span", "cn", "fact", "cite check"];
    if NOT_CITATIONS.contains(&name) {
        return false;
    }
    name == "citation"
        || name == "cite"
        || name.starts_with("cite ")
        || name.starts_with("sfn")
        || name.starts_with("harvnb")
        || name == "harv"
        || name == "harvp"
}

fn starts_ci(s: &str, at: usize, pat: &str) -> bool {
    let b = s.as_bytes();
    at + pat.len() <= b.len() && b[at..at + pat.len()].eq_ignore_ascii_case(pat.as_bytes())
}

fn find(s: &str, from: usize, to: usize, pat: &str) -> Option<usize> {
    s.get(from..to)?.find(pat).map(|p| p + from)
}

fn find_ci(s: &str, from: usize, to: usize, pat: &str) -> Option<usize> {
    let b = s.as_bytes();
    let n = pat.len();
    if to < n {
        return None;
    }
    (from..=to - n).find(|&i| b[i..i + n].eq_ignore_ascii_case(pat.as_bytes()))
}

/// End (exclusive) of a balanced `open ... close` region starting at `at`.
fn balanced_end(s: &str, at: usize, to: usize, open: &str, close: &str) -> Option<usize> {
    let b = s.as_bytes();
    let mut depth = 0usize;
    let mut i = at;
    while i < to {
        if b[i..to].starts_with(open.as_bytes()) {
            depth += 1;
            i += open.len();
        } else if b[i..to].starts_with(close.as_bytes()) {
            depth -= 1;
            i += close.len();
            if depth == 0 {
                return Some(i);
            }
        } else {
            i += 1;
        }
    }
    None
}

/// Splits `s[range]` on `|` that are not nested in `{{ }}` or `[[ ]]`.
pub(crate) fn split_params(s: &str) -> Vec<&str> {
    let b = s.as_bytes();
    let (mut braces, mut brackets) = (0i32, 0i32);
    let mut parts = Vec::new();
    let mut last = 0;
    let mut i = 0;
    while i < b.len() {
        if b[i..].starts_with(b"{{") {
            braces += 1;
            i += 2;
            continue;
        }
        if b[i..].starts_with(b"}}") {
            braces -= 1;
            i += 2;
            continue;
        }
        if b[i..].starts_with(b"[[") {
            brackets += 1;
            i += 2;
            continue;
        }
        if b[i..].starts_with(b"]]") {
            brackets -= 1;
            i += 2;
            continue;
        }
        if b[i] == b'|' && braces <= 0 && brackets <= 0 {
            parts.push(&s[last..i]);
            last = i + 1;
        }
        i += 1;
    }
    parts.push(&s[last..]);
    parts
}

fn at_line_start(s: &str, at: usize) -> bool {
    s[..at].rsplit('\n').next().is_none_or(|prefix| prefix.trim().is_empty())
}

fn url_scheme_len(s: &str, at: usize) -> Option<usize> {
    ["https://", "http://", "ftp://", "//"].iter().find(|p| starts_ci(s, at, p)).map(|p| p.len())
}

fn is_url_stop(c: char) -> bool {
    c.is_whitespace() || matches!(c, '|' | ']' | '[' | '<' | '>' | '{' | '}' | '"')
}

struct Scanner<'a> {
    src: &'a str,
    out: Cleaned,
}

impl Scanner<'_> {
    fn push_str(&mut self, mode: Mode, text: &str) {
        if mode.emit {
            self.out.text.push_str(text);
        }
    }

    fn marker(&mut self, mode: Mode) -> Option<usize> {
        if mode.emit {
            let at = self.out.text.len();
            self.out.markers.push(at);
            Some(at)
        } else {
            mode.anchor
        }
    }

    fn run(&mut self, start: usize, end: usize, mode: Mode) {
        let src = self.src;
        let b = src.as_bytes();
        let mut i = start;
        while i < end {
            let c = b[i];
            if c == b'<' {
                if let Some(next) = self.tag(i, end, mode) {
                    i = next;
                    continue;
                }
            } else if c == b'{' && b.get(i + 1) == Some(&b'{') {
                i = self.template(i, end, mode);
                continue;
            } else if c == b'{' && b.get(i + 1) == Some(&b'|') && at_line_start(src, i) {
                i = self.table(i, end, mode);
                continue;
            } else if c == b'[' && b.get(i + 1) == Some(&b'[') {
                if let Some(next) = self.wikilink(i, end, mode) {
                    i = next;
                    continue;
                }
            } else if c == b'[' {
                if let Some(next) = self.external_link(i, end, mode) {
                    i = next;
                    continue;
                }
            } else if c == b'\'' && b.get(i + 1) == Some(&b'\'') {
                while i < end && b[i] == b'\'' {
                    i += 1;
                }
                continue;
            } else if c == b'&' {
                if let Some((decoded, len)) = entity(&src[i..end]) {
                    self.push_str(mode, decoded);
                    i += len;
                    continue;
                }
            } else if c == b'_' && b.get(i + 1) == Some(&b'_') {
                if let Some(len) = magic_word(&src[i..end]) {
                    i += len;
                    continue;
                }
            } else if (c == b'h' || c == b'H' || c == b'f' || c == b'F')
                && (i == 0 || !b[i - 1].is_ascii_alphanumeric())
                && url_scheme_len(src, i).is_some_and(|l| l > 2)
            {
                let stop = src[i..end].find(is_url_stop).map_or(end, |p| i + p);
                if mode.emit || mode.in_ref {
                    self.out.urls.push(RawUrl { url: src[i..stop].to_string(), anchor: mode.anchor });
                }
                i = stop;
                continue;
            }
            let ch = src[i..].chars().next().expect("in bounds");
            if mode.emit {
                self.out.text.push(ch);
            }
            i += ch.len_utf8();
        }
    }

    /// Handles `<...>` at `at`. `None` means "not a tag, emit literally".
    fn tag(&mut self, at: usize, end: usize, mode: Mode) -> Option<usize> {
        let src = self.src;
        if starts_ci(src, at, "<!--") {
            return Some(find(src, at + 4, end, "-->").map_or(end, |p| p + 3));
        }
        let closing = src.as_bytes().get(at + 1) == Some(&b'/');
        let name_start = at + 1 + usize::from(closing);
        let name_len = src[name_start..end].bytes().take_while(|c| c.is_ascii_alphanumeric()).count();
        if name_len == 0 {
            return None;
        }
        let name = src[name_start..name_start + name_len].to_ascii_lowercase();
        let limit = end.min(name_start + 2048);
        let gt = find(src, name_start + name_len, limit, ">")?;
        if src[name_start..gt].contains('<') {
            return None;
        }
        let self_closing = src[..gt].ends_with('/');
        let after = gt + 1;
        if closing {
            return Some(after);
        }
        match name.as_str() {
            "ref" => {
                let anchor = self.marker(mode);
                if self_closing {
                    return Some(after);
                }
                let (body_end, next) = match find_ci(src, after, end, "</ref") {
                    Some(p) => (p, find(src, p, end, ">").map_or(end, |q| q + 1)),
                    None => (end, end),
                };
                self.run(after, body_end, Mode { emit: false, in_ref: true, anchor });
                Some(next)
            }
            "references" => {
                if self_closing {
                    return Some(after);
                }
                let (body_end, next) = match find_ci(src, after, end, "</references") {
                    Some(p) => (p, find(src, p, end, ">").map_or(end, |q| q + 1)),
                    None => (end, end),
                };
                self.run(after, body_end, Mode { emit: false, in_ref: false, anchor: None });
                Some(next)
            }
            "br" => {
                self.push_str(mode, " ");
                Some(after)
            }
            "nowiki" if !self_closing => {
                let close = find_ci(src, after, end, "</nowiki").unwrap_or(end);
                self.push_str(mode, &src[after..close]);
                Some(find(src, close, end, ">").map_or(end, |q| q + 1))
            }
            n if DROP_CONTENT.contains(&n) && !self_closing => {
                let close = find_ci(src, after, end, &format!("</{n}"));
                Some(close.and_then(|p| find(src, p, end, ">")).map_or(end, |q| q + 1))
            }
            _ => Some(after),
        }
    }

    fn template(&mut self, at: usize, end: usize, mode: Mode) -> usize {
        let src = self.src;
        let close = balanced_end(src, at, end, "{{", "}}");
        let inner_end = close.map_or(end, |c| c - 2);
        let next = close.unwrap_or(end);
        let inner = &src[(at + 2).min(inner_end)..inner_end];
        let params = split_params(inner);
        let name = params[0]
            .trim()
            .trim_start_matches("Template:")
            .trim_start_matches("template:")
            .replace('_', " ")
            .to_lowercase();
        if is_citation_template(&name) {
            let anchor = if mode.in_ref { mode.anchor } else { self.marker(mode) };
            for p in &params[1..] {
                if let Some((key, value)) = p.split_once('=') {
                    if key.trim().eq_ignore_ascii_case("url") {
                        let value = value.trim();
                        if !value.is_empty() {
                            self.out.urls.push(RawUrl { url: value.to_string(), anchor });
                        }
                    }
                }
            }
        } else {
            self.run(at + 2, inner_end.max(at + 2), Mode { emit: false, ..mode });
        }
        next
    }

    fn table(&mut self, at: usize, end: usize, mode: Mode) -> usize {
        let src = self.src;
        let mut depth = 0usize;
        let mut pos = at;
        let mut close = end;
        for line in src[at..end].split_inclusive('\n') {
            let t = line.trim_start();
            if t.starts_with("{|") {
                depth += 1;
            } else if t.starts_with("|}") {
                depth -= 1;
                if depth == 0 {
                    close = pos + line.trim_end_matches('\n').len();
                    break;
                }
            }
            pos += line.len();
        }
        self.run(at + 2, close, Mode { emit: false, ..mode });
        close
    }

    fn wikilink(&mut self, at: usize, end: usize, mode: Mode) -> Option<usize> {
        let src = self.src;
        let close = balanced_end(src, at, end, "[[", "]]")?;
        let inner_start = at + 2;
        let inner_end = close - 2;
        let inner = &src[inner_start..inner_end];
        let target = split_params(inner)[0].trim();
        let lower = target.to_ascii_lowercase();
        let lower = lower.trim_start_matches(':');
        if MEDIA_PREFIXES.iter().any(|p| lower.starts_with(p)) || (is_interlanguage(lower) && !target.starts_with(':')) {
            self.run(inner_start, inner_end, Mode { emit: false, ..mode });
            return Some(close);
        }
        let start_out = self.out.text.len();
        match inner.find('|').filter(|_| !inner.starts_with('|')) {
            Some(pipe) if inner_start + pipe + 1 < inner_end => {
                self.run(inner_start + pipe + 1, inner_end, mode);
            }
            _ => {
                let t = target.trim_start_matches(':');
                self.push_str(mode, t);
            }
        }
        if mode.emit && self.out.text.len() > start_out {
            self.out.protected.push(start_out..self.out.text.len());
        }
        Some(close)
    }

    fn external_link(&mut self, at: usize, end: usize, mode: Mode) -> Option<usize> {
        let src = self.src;
        url_scheme_len(src, at + 1)?;
        let line_end = src[at..end].find('\n').map_or(end, |p| at + p);
        let close = find(src, at, line_end, "]")?;
        let inner = &src[at + 1..close];
        let (url, label) = match inner.find(char::is_whitespace) {
            Some(p) => (&inner[..p], inner[p..].trim()),
            None => (inner, ""),
        };
        if mode.emit || mode.in_ref {
            self.out.urls.push(RawUrl { url: url.to_string(), anchor: mode.anchor });
        }
        if !label.is_empty() && mode.emit {
            let start_out = self.out.text.len();
            let rest = &inner[url.len()..];
            let label_start = at + 1 + url.len() + (rest.len() - rest.trim_start().len());
            self.run(label_start, close, mode);
            if self.out.text.len() > start_out {
                self.out.protected.push(start_out..self.out.text.len());
            }
        }
        Some(close + 1)
    }
}

fn is_interlanguage(target: &str) -> bool {
    match target.split_once(':') {
        Some((prefix, rest)) => {
            !rest.is_empty()
                && (2..=3).contains(&prefix.len())
                && prefix.bytes().all(|c| c.is_ascii_lowercase())
                && !matches!(prefix, "wp" | "w")
        }
        None => false,
    }
}

fn entity(s: &str) -> Option<(&'static str, usize)> {
    const TABLE: &[(&str, &str)] = &[
        ("&nbsp;", " "),
        ("&amp;", "&"),
        ("&quot;", "\""),
        ("&lt;", "<"),
        ("&gt;", ">"),
        ("&ndash;", "\u{2013}"),
        ("&mdash;", "\u{2014}"),
        ("&minus;", "\u{2212}"),
        ("&thinsp;", " "),
        ("&#39;", "'"),
    ];
    TABLE.iter().find(|(k, _)| s.starts_with(k)).map(|(k, v)| (*v, k.len()))
}

fn magic_word(s: &str) -> Option<usize> {
    let rest = &s[2..];
    let n = rest.bytes().take_while(|c| c.is_ascii_uppercase()).count();
    (n > 0 && rest[n..].starts_with("__")).then_some(n + 4)
}
