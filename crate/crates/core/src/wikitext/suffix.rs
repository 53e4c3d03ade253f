//! Public-suffix rules and URL-to-domain normalization.
//!
//! Rules use the standard public suffix list text format (`//` comments,
//! `*.` wildcards, `!` exceptions), so the full upstream list can replace
//! the bundled snapshot.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;
use url::{Host, Url};

const BUNDLED: &str = include_str!("../../data/public_suffix_snapshot.dat");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("cannot parse URL `{0}`")]
    Unparseable(String),
    #[error("URL `{0}` has no usable host")]
    NoHost(String),
}

#[derive(Debug, Clone, Default)]
pub struct SuffixList {
    rules: HashSet<String>,
    wildcards: HashSet<String>,
    exceptions: HashSet<String>,
}

impl SuffixList {
    pub fn parse(text: &str) -> Self {
        let mut list = SuffixList::default();
        for line in text.lines() {
            let rule = line.split_whitespace().next().unwrap_or("");
            if rule.is_empty() || rule.starts_with("//") {
                continue;
            }
            let rule = rule.to_ascii_lowercase();
            if let Some(rest) = rule.strip_prefix('!') {
                list.exceptions.insert(rest.to_string());
            } else if let Some(rest) = rule.strip_prefix("*.") {
                list.wildcards.insert(rest.to_string());
            } else {
                list.rules.insert(rule);
            }
        }
        list
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    /// The snapshot shipped with the crate.
    pub fn bundled() -> &'static SuffixList {
        static LIST: OnceLock<SuffixList> = OnceLock::new();
        LIST.get_or_init(|| SuffixList::parse(BUNDLED))
    }

    /// Number of labels in the public suffix of `host`.
    fn suffix_labels(&self, labels: &[&str]) -> usize {
        let n = labels.len();
        for k in (1..=n).rev() {
            let candidate = labels[n - k..].join(".");
            if self.exceptions.contains(&candidate) {
                return k - 1;
            }
        }
        for k in (1..=n).rev() {
            let candidate = labels[n - k..].join(".");
            if self.rules.contains(&candidate) || (k >= 2 && self.wildcards.contains(&labels[n - k + 1..].join("."))) {
                return k;
            }
        }
        // implicit "*" rule
        1
    }

    /// Public suffix plus one label, or `None` when the host is itself a
    /// public suffix.
    pub fn registrable_domain(&self, host: &str) -> Option<String> {
        let labels: Vec<&str> = host.split('.').collect();
        let k = self.suffix_labels(&labels);
        (labels.len() > k).then(|| labels[labels.len() - k - 1..].join("."))
    }
}

/// Lowercased host of `raw` without scheme, port, path or a leading `www.`.
/// Scheme-less (`www.x.org/a`) and protocol-relative (`//x.org`) forms are
/// accepted.
pub fn normalize_host(raw: &str) -> Result<String, DomainError> {
    let trimmed = raw.trim().trim_matches(|c| matches!(c, '"' | '\'' | '<' | '>'));
    let candidate = if trimmed.starts_with("//") {
        format!("http:{trimmed}")
    } else if !trimmed.contains("://") {
        format!("http://{trimmed}")
    } else {
        trimmed.to_string()
    };
    let url = Url::parse(&candidate).map_err(|_| DomainError::Unparseable(raw.to_string()))?;
    let host = match url.host() {
        Some(Host::Domain(d)) => d.to_ascii_lowercase(),
        Some(Host::Ipv4(ip)) => ip.to_string(),
        _ => return Err(DomainError::NoHost(raw.to_string())),
    };
    let host = host.trim_end_matches('.');
    let host = host.strip_prefix("www.").unwrap_or(host);
    let valid = !host.is_empty()
        && host.contains('.')
        && !host.starts_with(['.', '-'])
        && !host.ends_with(['.', '-'])
        && !host.contains("..")
        && host.bytes().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == b'.' || c == b'-');
    if !valid {
        return Err(DomainError::NoHost(raw.to_string()));
    }
    Ok(host.to_string())
}

/// `(host, registrable domain)` of a URL.
pub fn normalize_url(raw: &str, suffixes: &SuffixList) -> Result<(String, String), DomainError> {
    let host = normalize_host(raw)?;
    if host.bytes().all(|c| c.is_ascii_digit() || c == b'.') {
        return Ok((host.clone(), host));
    }
    let domain = suffixes
        .registrable_domain(&host)
        .ok_or_else(|| DomainError::NoHost(raw.to_string()))?;
    Ok((host, domain))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> SuffixList {
        SuffixList::parse("// test list\ncom\nuk\nco.uk\n*.ck\n!www.ck\nblogspot.com\n")
    }

    #[test]
    fn registrable_domains() {
        let l = fixture();
        assert_eq!(l.registrable_domain("sub.dailystar.co.uk").as_deref(), Some("dailystar.co.uk"));
        assert_eq!(l.registrable_domain("news.bbc.com").as_deref(), Some("bbc.com"));
        assert_eq!(l.registrable_domain("co.uk"), None);
        assert_eq!(l.registrable_domain("a.b.foo.ck").as_deref(), Some("b.foo.ck"));
        assert_eq!(l.registrable_domain("www.ck").as_deref(), Some("www.ck"));
        assert_eq!(l.registrable_domain("me.blogspot.com").as_deref(), Some("me.blogspot.com"));
        // unlisted TLD falls back to the implicit wildcard rule
        assert_eq!(l.registrable_domain("x.y.zz").as_deref(), Some("y.zz"));
    }

    #[test]
    fn host_normalization() {
        assert_eq!(normalize_host("https://www.BBC.com/news/x").unwrap(), "bbc.com");
        assert_eq!(normalize_host("//example.org:8080/a?b").unwrap(), "example.org");
        assert_eq!(normalize_host("www.example.org/path").unwrap(), "example.org");
        assert_eq!(normalize_host("http://example.org./").unwrap(), "example.org");
        assert!(normalize_host("http://localhost/").is_err());
        assert!(normalize_host("http://[::1]/").is_err());
        assert!(normalize_host("not a url at all").is_err());
    }

    #[test]
    fn bundled_snapshot_knows_common_suffixes() {
        let l = SuffixList::bundled();
        assert_eq!(l.registrable_domain("sub.dailystar.co.uk").as_deref(), Some("dailystar.co.uk"));
        assert_eq!(l.registrable_domain("baike.baidu.com").as_deref(), Some("baidu.com"));
        assert_eq!(l.registrable_domain("www.abc.net.au").as_deref(), Some("abc.net.au"));
    }
}
