//! Article retrieval over a MediaWiki-style API and the reference history
//! of listed domains across revisions.

mod fetch;
mod history;

pub use fetch::{
    fetch_articles, fetch_with, FetchError, FetchRequest, FetchResult, FetchTarget, HttpResponse, HttpTransport,
    Transport, TransportError,
};
pub use history::{build_reference_history, build_reference_history_with, render_history, IngestError, ReferenceOccurrence};
