//! Fetching over real HTTP from a local mock of the MediaWiki action API.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use refquality::ingest::{fetch_with, FetchError, FetchRequest, HttpTransport};
use url::Url;

#[derive(Clone, Copy)]
enum Mode {
    /// First request per batch fails with 503, then serves.
    FlakyOnce,
    AlwaysDown,
}

struct Server {
    base: String,
    requests: Arc<AtomicUsize>,
}

fn page_json(title: &str) -> String {
    if title.starts_with("Missing") {
        return format!(r#"{{"title":{title:?},"missing":true}}"#);
    }
    let id: u64 = title.bytes().map(u64::from).sum();
    let text = format!("'''{title}''' is a town.<ref>https://www.bbc.com/{id}</ref>");
    format!(r#"{{"pageid":{id},"title":{title:?},"revisions":[{{"slots":{{"main":{{"content":{text:?}}}}}}}]}}"#)
}

fn respond(stream: &mut TcpStream, status: &str, body: &str) {
    let _ = write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
}

fn handle(mut stream: TcpStream, mode: Mode, seen: &Mutex<HashMap<String, usize>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    reader.read_line(&mut request_line).unwrap();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
            break;
        }
    }
    let target = request_line.split_whitespace().nth(1).unwrap_or("/");
    let url = Url::parse(&format!("http://localhost{target}")).unwrap();
    let titles = url.query_pairs().find(|(k, _)| k == "titles").map(|(_, v)| v.into_owned()).unwrap_or_default();
    let attempt = {
        let mut seen = seen.lock().unwrap();
        let n = seen.entry(titles.clone()).or_insert(0);
        *n += 1;
        *n
    };
    match mode {
        Mode::AlwaysDown => respond(&mut stream, "500 Internal Server Error", "{}"),
        Mode::FlakyOnce if attempt == 1 => respond(&mut stream, "503 Service Unavailable", "{}"),
        Mode::FlakyOnce => {
            let pages: Vec<String> = titles.split('|').map(page_json).collect();
            respond(&mut stream, "200 OK", &format!(r#"{{"query":{{"pages":[{}]}}}}"#, pages.join(",")));
        }
    }
}

fn serve(mode: Mode) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/w/api.php", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&requests);
    let seen = Arc::new(Mutex::new(HashMap::new()));
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            counter.fetch_add(1, Ordering::SeqCst);
            let seen = Arc::clone(&seen);
            std::thread::spawn(move || handle(stream, mode, &seen));
        }
    });
    Server { base, requests }
}

fn request(base: &str, titles: &[&str]) -> FetchRequest {
    let mut req = FetchRequest::titles(base, titles.iter().copied());
    req.batch_size = 2;
    req.max_parallel = 2;
    req.backoff = Duration::from_millis(5);
    req
}

#[test]
fn retries_transient_errors_and_skips_missing_pages() {
    let server = serve(Mode::FlakyOnce);
    let transport = HttpTransport::new(Duration::from_secs(10)).unwrap();
    let got = fetch_with(&request(&server.base, &["Alpha", "Beta", "Gamma", "Missing town"]), &transport).unwrap();
    let titles: Vec<&str> = got.titles.values().map(String::as_str).collect();
    assert_eq!(got.pages.len(), 3);
    assert!(titles.contains(&"Alpha") && titles.contains(&"Gamma"));
    assert_eq!(got.skipped, ["Missing town"]);
    assert!(got.pages.values().all(|t| t.contains("<ref>https://www.bbc.com/")));
    // two batches, each failing once
    assert_eq!(server.requests.load(Ordering::SeqCst), 4);
}

#[test]
fn persistent_failure_names_every_page() {
    let server = serve(Mode::AlwaysDown);
    let transport = HttpTransport::new(Duration::from_secs(10)).unwrap();
    let err = fetch_with(&request(&server.base, &["Alpha", "Beta", "Gamma"]), &transport).unwrap_err();
    match err {
        FetchError::Failed { mut failed, message } => {
            failed.sort();
            assert_eq!(failed, ["Alpha", "Beta", "Gamma"]);
            assert!(message.contains("500"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(server.requests.load(Ordering::SeqCst), 6);
}

#[test]
fn unreachable_endpoint_is_a_fetch_failure() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/w/api.php", listener.local_addr().unwrap());
    drop(listener);
    let transport = HttpTransport::new(Duration::from_secs(2)).unwrap();
    let err = fetch_with(&request(&base, &["Alpha"]), &transport).unwrap_err();
    assert!(matches!(err, FetchError::Failed { ref failed, .. } if failed == &["Alpha"]));
}
