//! Seeded synthetic articles, corpora and study designs with known ground
//! truth, for oracle and throughput tests.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{MetaTopic, PageRecord, RevisionRecord};
use crate::quasiexp::{Covariates, MatchUnit};
use crate::stats::logistic::sigmoid;

/// Sentences the bundled scorer labels as needing a citation. `{n}` is
/// replaced by a number.
pub const NEED_TEMPLATES: &[&str] = &[
    "According to a {n} survey, {n} percent of residents were born abroad.",
    "The company was founded in {n} and sold in {n} for {n} million dollars.",
    "Critics described the album as the best record of {n}.",
    "Researchers found that the rate had doubled by {n}, the study reported.",
    "The population was estimated at {n} thousand in {n}.",
    "She won {n} major awards, the most of any player, according to critics.",
    "Critics widely considered it the largest of {n} sites, according to a {n} report.",
    "The storm killed {n} people and caused {n} billion dollars in damage.",
];

/// Sentences the bundled scorer labels as not needing one.
pub const PLAIN_TEMPLATES: &[&str] = &[
    "The river is located in the north of the valley.",
    "The town is on the river and has a small church.",
    "It is also known as the old mill.",
    "The house has two floors and a garden.",
    "The road runs from the town to the coast.",
    "The village is in the hills to the west of the city.",
    "This is a type of tower with a wooden roof.",
];

/// Section headings used for body sections.
pub const SECTIONS: &[&str] = &["Geography", "Transport", "Location", "Setting", "Architecture"];

pub const SAFE_HOSTS: &[&str] = &["bbc.com", "www.nytimes.com", "nature.com", "jstor.org", "news.example.org", "abc.net.au"];
pub const RISKY_HOSTS: &[&str] = &["naturalnews.com", "sub.dailystar.co.uk", "www.infowars.com", "news.naturalnews.com"];

/// Perennial list matching the host pools.
pub const PERENNIAL_FIXTURE: &str = "domain\tlabel\tclassified_at\n\
naturalnews.com\tblacklisted\t2018-06-01T00:00:00Z\n\
dailystar.co.uk\tdeprecated\t2019-02-01T00:00:00Z\n\
infowars.com\tdeprecated\t2018-08-01T00:00:00Z\n\
bbc.com\tgenerally_reliable\t-\n\
nytimes.com\tgenerally_reliable\t-\n\
example.org\tnon_consensus\t-\n";

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceSpec {
    pub text: String,
    pub need: bool,
    /// Each entry is one `<ref>`; `None` is a reference without a URL.
    pub refs: Vec<Option<CitationSpec>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CitationSpec {
    pub url: String,
    pub risky: bool,
    pub style: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionSpec {
    pub title: Option<String>,
    pub paragraphs: Vec<Vec<SentenceSpec>>,
}

/// Article model rendered to wikitext; `see_also` and `external` hold list
/// items under excluded sections.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticleSpec {
    pub sections: Vec<SectionSpec>,
    pub see_also: Vec<String>,
    pub external: Vec<CitationSpec>,
}

impl ArticleSpec {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            if let Some(t) = &s.title {
                out.push_str(&format!("\n== {t} ==\n"));
            }
            for p in &s.paragraphs {
                let mut line = String::new();
                for (i, sent) in p.iter().enumerate() {
                    if i > 0 {
                        line.push(' ');
                    }
                    line.push_str(&sent.text);
                    for r in &sent.refs {
                        line.push_str(&render_ref(r.as_ref()));
                    }
                }
                out.push_str(&line);
                out.push_str("\n\n");
            }
        }
        if !self.see_also.is_empty() {
            out.push_str("== See also ==\n");
            for item in &self.see_also {
                out.push_str(&format!("* [[{item}]]. A related topic.\n"));
            }
        }
        if !self.external.is_empty() {
            out.push_str("\n== External links ==\n");
            for c in &self.external {
                out.push_str(&format!("* [{} Official site]\n", c.url));
            }
        }
        out
    }

    pub fn sentences(&self) -> impl Iterator<Item = &SentenceSpec> {
        self.sections.iter().flat_map(|s| s.paragraphs.iter().flatten())
    }

    /// `(needing sentences, needing sentences with a reference)`.
    pub fn need_truth(&self) -> (usize, usize) {
        self.sentences().filter(|s| s.need).fold((0, 0), |(n, c), s| (n + 1, c + usize::from(!s.refs.is_empty())))
    }

    /// `(URL citations, risky ones)`.
    pub fn risk_truth(&self) -> (usize, usize) {
        let urls: Vec<&CitationSpec> =
            self.sentences().flat_map(|s| s.refs.iter().flatten()).chain(self.external.iter()).collect();
        (urls.len(), urls.iter().filter(|c| c.risky).count())
    }
}

fn render_ref(r: Option<&CitationSpec>) -> String {
    match r {
        None => "<ref>Smith, J. (2001). A History. p. 4.</ref>".to_string(),
        Some(c) => match c.style % 3 {
            0 => format!("<ref>{}</ref>", c.url),
            1 => format!("<ref>{{{{cite web|url={}|title=Report|access-date=2020-01-01}}}}</ref>", c.url),
            _ => format!("<ref name=\"n{}\">{{{{cite news |title=Story |url={} |work=Paper}}}}</ref>", c.style, c.url),
        },
    }
}

fn fill(template: &str, rng: &mut impl Rng) -> String {
    let mut out = String::new();
    let mut parts = template.split("{n}");
    out.push_str(parts.next().unwrap_or(""));
    for p in parts {
        out.push_str(&rng.random_range(2..2500).to_string());
        out.push_str(p);
    }
    out
}

fn citation(rng: &mut impl Rng, risky_rate: f64) -> CitationSpec {
    let risky = rng.random_bool(risky_rate);
    let host = if risky { RISKY_HOSTS.choose(rng) } else { SAFE_HOSTS.choose(rng) }.expect("nonempty pool");
    let scheme = if rng.random_bool(0.5) { "https" } else { "http" };
    CitationSpec { url: format!("{scheme}://{host}/a/{}", rng.random_range(0..100_000)), risky, style: rng.random_range(0..6) }
}

pub fn sentence(rng: &mut impl Rng, risky_rate: f64) -> SentenceSpec {
    let need = rng.random_bool(0.5);
    let pool = if need { NEED_TEMPLATES } else { PLAIN_TEMPLATES };
    let text = fill(pool.choose(rng).expect("templates"), rng);
    let n_refs = match rng.random_range(0..10) {
        0..=4 => 0,
        5..=8 => 1,
        _ => 2,
    };
    let refs = (0..n_refs).map(|_| (!rng.random_bool(0.15)).then(|| citation(rng, risky_rate))).collect();
    SentenceSpec { text, need, refs }
}

pub fn article(rng: &mut impl Rng) -> ArticleSpec {
    let risky_rate = rng.random_range(0.0..0.4);
    let n_sections = rng.random_range(1..5);
    let mut sections = Vec::new();
    for s in 0..n_sections {
        let title = (s > 0).then(|| SECTIONS.choose(rng).expect("sections").to_string());
        let paragraphs = (0..rng.random_range(1..4))
            .map(|_| (0..rng.random_range(1..5)).map(|_| sentence(rng, risky_rate)).collect())
            .collect();
        sections.push(SectionSpec { title, paragraphs });
    }
    let see_also = (0..rng.random_range(0..3)).map(|i| format!("Related page {i}")).collect();
    let external = (0..rng.random_range(0..3)).map(|_| citation(rng, risky_rate)).collect();
    ArticleSpec { sections, see_also, external }
}

/// Independent random articles.
pub fn articles(seed: u64, n: usize) -> Vec<ArticleSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| article(&mut rng)).collect()
}

/// One edit: add, drop or rewrite a sentence, or add or drop a reference.
pub fn mutate(spec: &mut ArticleSpec, rng: &mut impl Rng) {
    let risky_rate = 0.2;
    let si = rng.random_range(0..spec.sections.len());
    let section = &mut spec.sections[si];
    let pi = rng.random_range(0..section.paragraphs.len());
    let para = &mut section.paragraphs[pi];
    match rng.random_range(0..5) {
        0 => para.push(sentence(rng, risky_rate)),
        1 if para.len() > 1 => {
            let k = rng.random_range(0..para.len());
            para.remove(k);
        }
        2 => {
            let k = rng.random_range(0..para.len());
            para[k] = sentence(rng, risky_rate);
        }
        3 => {
            let k = rng.random_range(0..para.len());
            para[k].refs.push(Some(citation(rng, risky_rate)));
        }
        _ => {
            let k = rng.random_range(0..para.len());
            para[k].refs.pop();
        }
    }
}

/// Pages with evolving wikitext and editor metadata, revisions spread over
/// 2010 to 2021. Each page has `revisions_per_page` revisions.
pub fn corpus(seed: u64, pages: usize, revisions_per_page: usize) -> Vec<PageRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: DateTime<Utc> = Utc.with_ymd_and_hms(2010, 1, 1, 0, 0, 0).unwrap();
    let span_secs = 12 * 365 * 86_400i64;
    let n_editors = 200u64;
    let mut editor_counts: Vec<u64> = (0..n_editors).map(|i| (i * i) % 997 + rng.random_range(0..5)).collect();
    let mut out = Vec::with_capacity(pages);
    let mut next_rev = 1u64;
    for page_id in 1..=pages as u64 {
        let mut spec = article(&mut rng);
        let mut offsets: Vec<i64> = (0..revisions_per_page).map(|_| rng.random_range(0..span_secs)).collect();
        offsets.sort_unstable();
        let mut revisions = Vec::with_capacity(revisions_per_page);
        let mut prev_len = 0i64;
        for (i, off) in offsets.into_iter().enumerate() {
            if i > 0 {
                for _ in 0..rng.random_range(1..3) {
                    mutate(&mut spec, &mut rng);
                }
            }
            let text = spec.render();
            let anonymous = rng.random_bool(0.1);
            let editor = (!anonymous).then(|| rng.random_range(0..n_editors));
            let count = editor.map_or(0, |e| {
                editor_counts[e as usize] += 1;
                editor_counts[e as usize]
            });
            revisions.push(RevisionRecord {
                revision_id: next_rev,
                page_id,
                timestamp: start + Duration::seconds(off),
                editor_id: editor,
                is_anonymous: anonymous,
                is_bot: editor.is_some_and(|e| e % 50 == 49),
                is_minor: rng.random_bool(0.2),
                byte_delta: text.len() as i64 - prev_len,
                prior_user_revision_count: count,
                comment: String::new(),
                wikitext: Some(text.clone()),
            });
            prev_len = text.len() as i64;
            next_rev += 1;
        }
        let meta = MetaTopic::ALL[rng.random_range(0..MetaTopic::ALL.len())];
        out.push(PageRecord {
            page_id,
            title: format!("Page {page_id}"),
            topics: [format!("{meta}.Synthetic")].into(),
            meta_topic: Some(meta),
            revisions,
        });
    }
    out
}

/// Standard-normal covariates and Bernoulli responses from
/// `sigmoid(beta[0] + beta[1..] . x)`.
pub fn logistic_sample(seed: u64, n: usize, beta: &[f64]) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let k = beta.len() - 1;
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..k).map(|_| normal.sample(&mut rng)).collect();
        let eta = beta[0] + x.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        y.push(rng.random_bool(sigmoid(eta)));
        rows.push(x);
    }
    (rows, y)
}

/// Units whose treatment depends on the covariates and whose outcome
/// depends on the covariates only (true effect zero).
pub fn confounded_units(seed: u64, n: usize) -> Vec<MatchUnit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..n)
        .map(|i| {
            let topic = MetaTopic::ALL[rng.random_range(0..MetaTopic::ALL.len())];
            let prev: f64 = rng.random();
            let z = normal.sample(&mut rng);
            let topic_shift = if topic == MetaTopic::Stem { 0.4 } else { 0.0 };
            let p = sigmoid(-1.6 + 2.0 * (prev - 0.5) + 0.8 * z + topic_shift);
            let treatment = rng.random_bool(p);
            let outcome = 0.4 * prev + 0.2 * z + 0.2 * normal.sample(&mut rng);
            MatchUnit {
                revision_id: i as u64,
                page_id: i as u64,
                editor_id: i as u64,
                treatment,
                covariates: Covariates { prev_score: prev, rev_size: 300.0 * z, topic: topic.to_string(), user_rev_count: None },
                outcome,
            }
        })
        .collect()
}

/// Line-delimited revision records readable by `corpus::parse_jsonl`.
pub fn to_jsonl(pages: &[PageRecord]) -> String {
    let mut out = String::new();
    for p in pages {
        for r in &p.revisions {
            let mut v = serde_json::to_value(r).expect("revision serializes");
            v["page_title"] = serde_json::Value::String(p.title.clone());
            out.push_str(&v.to_string());
            out.push('\n');
        }
    }
    out
}

/// Topic file (`page_id, topic, meta_topic`) for the pages' labels.
pub fn topics_tsv(pages: &[PageRecord]) -> String {
    let mut out = String::from("page_id\ttopic\tmeta_topic\n");
    for p in pages {
        let Some(meta) = p.meta_topic else { continue };
        for t in &p.topics {
            out.push_str(&format!("{}\t{t}\t{meta}\n", p.page_id));
        }
    }
    out
}
