use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;
use url::Url;

pub const MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchTarget {
    Titles(Vec<String>),
    RevisionIds(Vec<u64>),
}

impl FetchTarget {
    fn keys(&self) -> Vec<String> {
        match self {
            FetchTarget::Titles(t) => t.clone(),
            FetchTarget::RevisionIds(ids) => ids.iter().map(u64::to_string).collect(),
        }
    }

    fn param(&self) -> &'static str {
        match self {
            FetchTarget::Titles(_) => "titles",
            FetchTarget::RevisionIds(_) => "revids",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FetchRequest {
    pub target: FetchTarget,
    pub endpoint: String,
    pub batch_size: usize,
    pub max_parallel: usize,
    /// Delay before the first retry; doubled for each further one.
    pub backoff: Duration,
}

impl FetchRequest {
    pub fn titles<I: IntoIterator<Item = S>, S: Into<String>>(endpoint: &str, titles: I) -> Self {
        FetchRequest {
            target: FetchTarget::Titles(titles.into_iter().map(Into::into).collect()),
            endpoint: endpoint.to_string(),
            batch_size: 20,
            max_parallel: 4,
            backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct TransportError(pub String);

/// One blocking HTTP GET.
pub trait Transport: Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, FetchError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("refquality/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| FetchError::Invalid(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let resp = self.client.get(url).send().map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid fetch request: {0}")]
    Invalid(String),
    #[error("fetch failed after {MAX_ATTEMPTS} attempts for {} page(s) [{}]: {message}", failed.len(), failed.join(", "))]
    Failed { failed: Vec<String>, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchResult {
    /// Latest wikitext per page id.
    pub pages: BTreeMap<u64, String>,
    pub titles: BTreeMap<u64, String>,
    /// Requested titles (or revision ids) the endpoint reported missing.
    pub skipped: Vec<String>,
}

pub fn fetch_articles(req: &FetchRequest) -> Result<FetchResult, FetchError> {
    let transport = HttpTransport::new(Duration::from_secs(60))?;
    fetch_with(req, &transport)
}

#[derive(Deserialize)]
struct ApiResponse {
    #[serde(default)]
    query: Option<ApiQuery>,
}

#[derive(Deserialize)]
struct ApiQuery {
    #[serde(default)]
    pages: Vec<ApiPage>,
    #[serde(default)]
    badrevids: serde_json::Value,
}

#[derive(Deserialize)]
struct ApiPage {
    #[serde(default)]
    pageid: Option<u64>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    missing: bool,
    #[serde(default)]
    invalid: bool,
    #[serde(default)]
    revisions: Vec<ApiRevision>,
}

#[derive(Deserialize)]
struct ApiRevision {
    slots: BTreeMap<String, ApiSlot>,
}

#[derive(Deserialize)]
struct ApiSlot {
    #[serde(default)]
    content: Option<String>,
}

enum BatchOutcome {
    Done { pages: Vec<(u64, String, String)>, skipped: Vec<String> },
    NotFound,
    Failed(String),
}

fn batch_url(endpoint: &Url, param: &str, keys: &[String]) -> String {
    let mut url = endpoint.clone();
    url.query_pairs_mut()
        .append_pair("action", "query")
        .append_pair("prop", "revisions")
        .append_pair("rvprop", "content")
        .append_pair("rvslots", "main")
        .append_pair("format", "json")
        .append_pair("formatversion", "2")
        .append_pair(param, &keys.join("|"));
    url.into()
}

/// `(page id, title, wikitext)` rows and skipped keys.
type Decoded = (Vec<(u64, String, String)>, Vec<String>);

fn decode(body: &str, keys: &[String]) -> Result<Decoded, String> {
    let resp: ApiResponse = serde_json::from_str(body).map_err(|e| format!("bad API response: {e}"))?;
    let query = resp.query.ok_or("API response has no `query` object")?;
    let mut pages = Vec::new();
    let mut skipped = Vec::new();
    for p in query.pages {
        let content = p.revisions.last().and_then(|r| r.slots.get("main")).and_then(|s| s.content.clone());
        match (p.pageid, content) {
            (Some(id), Some(text)) if !p.missing && !p.invalid => pages.push((id, p.title, text)),
            _ => skipped.push(p.title),
        }
    }
    match query.badrevids {
        serde_json::Value::Object(m) => skipped.extend(m.keys().cloned()),
        serde_json::Value::Array(a) => {
            skipped.extend(a.iter().filter_map(|v| v.get("revid")).map(|v| v.to_string()));
        }
        _ => {}
    }
    if pages.is_empty() && skipped.is_empty() && !keys.is_empty() {
        return Err("API response lists no pages".into());
    }
    Ok((pages, skipped))
}

fn run_batch(transport: &dyn Transport, url: &str, keys: &[String], backoff: Duration) -> BatchOutcome {
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        if attempt > 0 {
            std::thread::sleep(backoff * 2u32.pow(attempt - 1));
        }
        match transport.get(url) {
            Ok(r) if r.status == 404 => return BatchOutcome::NotFound,
            Ok(r) if (200..300).contains(&r.status) => {
                return match decode(&r.body, keys) {
                    Ok((pages, skipped)) => BatchOutcome::Done { pages, skipped },
                    Err(e) => BatchOutcome::Failed(e),
                }
            }
            Ok(r) if r.status >= 500 || r.status == 429 => last = format!("HTTP {}", r.status),
            Ok(r) => return BatchOutcome::Failed(format!("HTTP {}", r.status)),
            Err(e) => last = e.0,
        }
        log::debug!("attempt {} for {} page(s) failed: {last}", attempt + 1, keys.len());
    }
    BatchOutcome::Failed(last)
}

/// Fetches in batches of `batch_size` with at most `max_parallel` requests
/// in flight. Transient failures (5xx, 429, transport errors) are retried
/// with exponential backoff. A 404 on a multi-page batch is retried page by
/// page so only the missing ones are skipped.
pub fn fetch_with(req: &FetchRequest, transport: &dyn Transport) -> Result<FetchResult, FetchError> {
    if req.batch_size == 0 {
        return Err(FetchError::Invalid("batch_size must be at least 1".into()));
    }
    if req.max_parallel == 0 {
        return Err(FetchError::Invalid("max_parallel must be at least 1".into()));
    }
    let keys = req.target.keys();
    if keys.is_empty() {
        return Ok(FetchResult::default());
    }
    let endpoint = Url::parse(&req.endpoint).map_err(|e| FetchError::Invalid(format!("endpoint: {e}")))?;
    let param = req.target.param();

    let batches: Vec<&[String]> = keys.chunks(req.batch_size).collect();
    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<(usize, Vec<String>, BatchOutcome)>> = Mutex::new(Vec::new());
    let workers = req.max_parallel.min(batches.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(batch) = batches.get(i) else { break };
                let url = batch_url(&endpoint, param, batch);
                let mut results = vec![(batch.to_vec(), run_batch(transport, &url, batch, req.backoff))];
                if batch.len() > 1 && matches!(results[0].1, BatchOutcome::NotFound) {
                    results = batch
                        .iter()
                        .map(|k| {
                            let one = std::slice::from_ref(k);
                            (one.to_vec(), run_batch(transport, &batch_url(&endpoint, param, one), one, req.backoff))
                        })
                        .collect();
                }
                let mut guard = outcomes.lock().expect("outcome lock");
                guard.extend(results.into_iter().map(|(k, o)| (i, k, o)));
            });
        }
    });

    let mut outcomes = outcomes.into_inner().expect("outcome lock");
    outcomes.sort_by_key(|(i, _, _)| *i);
    let mut result = FetchResult::default();
    let mut failed = Vec::new();
    let mut message = String::new();
    for (_, batch_keys, outcome) in outcomes {
        match outcome {
            BatchOutcome::Done { pages, skipped } => {
                for (id, title, text) in pages {
                    result.pages.insert(id, text);
                    result.titles.insert(id, title);
                }
                result.skipped.extend(skipped);
            }
            BatchOutcome::NotFound => result.skipped.extend(batch_keys),
            BatchOutcome::Failed(m) => {
                failed.extend(batch_keys);
                message = m;
            }
        }
    }
    if !failed.is_empty() {
        return Err(FetchError::Failed { failed, message });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Serves a fixed page table; counts concurrent calls.
    struct Mock {
        pages: HashMap<String, (u64, String)>,
        in_flight: AtomicUsize,
        peak: AtomicUsize,
        calls: AtomicUsize,
        fail_first: usize,
    }

    impl Mock {
        fn new(pages: &[(&str, u64, &str)]) -> Self {
            Mock {
                pages: pages.iter().map(|(t, id, b)| (t.to_string(), (*id, b.to_string()))).collect(),
                in_flight: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
                calls: AtomicUsize::new(0),
                fail_first: 0,
            }
        }
    }

    impl Transport for Mock {
        fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
            let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            let call = self.calls.fetch_add(1, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(5));
            let url = Url::parse(url).unwrap();
            let titles: Vec<String> = url
                .query_pairs()
                .find(|(k, _)| k == "titles")
                .map(|(_, v)| v.split('|').map(str::to_string).collect())
                .unwrap_or_default();
            let resp = if call < self.fail_first {
                HttpResponse { status: 503, body: String::new() }
            } else if titles.iter().any(|t| !self.pages.contains_key(t)) {
                HttpResponse { status: 404, body: String::new() }
            } else {
                let pages: Vec<serde_json::Value> = titles
                    .iter()
                    .map(|t| {
                        let (id, body) = &self.pages[t];
                        serde_json::json!({"pageid": id, "title": t,
                            "revisions": [{"slots": {"main": {"content": body}}}]})
                    })
                    .collect();
                HttpResponse { status: 200, body: serde_json::json!({"query": {"pages": pages}}).to_string() }
            };
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            Ok(resp)
        }
    }

    fn req(titles: &[&str]) -> FetchRequest {
        FetchRequest {
            backoff: Duration::from_millis(1),
            ..FetchRequest::titles("http://mock.invalid/w/api.php", titles.iter().copied())
        }
    }

    #[test]
    fn empty_request() {
        let mock = Mock::new(&[]);
        assert_eq!(fetch_with(&req(&[]), &mock).unwrap(), FetchResult::default());
        assert_eq!(mock.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn serves_exact_bodies_and_skips_missing() {
        let mock = Mock::new(&[("A", 1, "alpha"), ("B", 2, "beta")]);
        let r = fetch_with(&FetchRequest { batch_size: 3, ..req(&["A", "Gone", "B"]) }, &mock).unwrap();
        assert_eq!(r.pages.len(), 2);
        assert_eq!(r.pages[&1], "alpha");
        assert_eq!(r.pages[&2], "beta");
        assert_eq!(r.skipped, ["Gone"]);
    }

    #[test]
    fn bounded_parallelism() {
        let names: Vec<String> = (0..40).map(|i| format!("P{i}")).collect();
        let owned: Vec<(&str, u64, &str)> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i as u64, "x")).collect();
        let mock = Mock::new(&owned);
        let titles: Vec<&str> = names.iter().map(String::as_str).collect();
        let r = fetch_with(&FetchRequest { batch_size: 2, max_parallel: 3, ..req(&titles) }, &mock).unwrap();
        assert_eq!(r.pages.len(), 40);
        assert!(mock.peak.load(Ordering::SeqCst) <= 3);
        assert_eq!(mock.calls.load(Ordering::SeqCst), 20);
    }

    #[test]
    fn retries_then_fails_with_titles() {
        let mut mock = Mock::new(&[("A", 1, "alpha")]);
        mock.fail_first = 2;
        let r = fetch_with(&req(&["A"]), &mock).unwrap();
        assert_eq!(r.pages[&1], "alpha");
        assert_eq!(mock.calls.load(Ordering::SeqCst), 3);

        let mut mock = Mock::new(&[("A", 1, "alpha")]);
        mock.fail_first = usize::MAX;
        match fetch_with(&req(&["A"]), &mock) {
            Err(FetchError::Failed { failed, .. }) => assert_eq!(failed, ["A"]),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(mock.calls.load(Ordering::SeqCst), MAX_ATTEMPTS as usize);
    }

    #[test]
    fn missing_flag_in_body() {
        let body = r#"{"query":{"pages":[{"pageid":5,"title":"A","revisions":[{"slots":{"main":{"content":"t"}}}]},{"title":"B","missing":true}]}}"#;
        let (pages, skipped) = decode(body, &["A".into(), "B".into()]).unwrap();
        assert_eq!(pages, [(5, "A".to_string(), "t".to_string())]);
        assert_eq!(skipped, ["B"]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mock = Mock::new(&[]);
        assert!(fetch_with(&FetchRequest { batch_size: 0, ..req(&["A"]) }, &mock).is_err());
        assert!(fetch_with(&FetchRequest { max_parallel: 0, ..req(&["A"]) }, &mock).is_err());
    }
}
