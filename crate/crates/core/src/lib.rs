pub mod citation_need;
pub mod corpus;
pub mod ingest;
pub mod metrics;
pub mod perennial;
pub mod pipeline;
pub mod quasiexp;
pub mod stats;
pub mod tsv;
pub mod wikitext;
#[cfg(feature = "synth")]
pub mod synth;
