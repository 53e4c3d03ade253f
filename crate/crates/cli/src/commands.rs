//! One function per subcommand. Every stage prints a single `key=value`
//! summary line; outputs are staged and committed only on success.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use anyhow::{anyhow, Result};
use chrono::{DateTime, SecondsFormat, Utc};

use refquality::citation_need::{self, EmbeddingTable, LogisticNeedModel, Scorer};
use refquality::corpus::{attach_topics, load_corpus, load_topics, partition_editors, CorpusFormat, MetaTopic, PageRecord};
use refquality::ingest::{build_reference_history_with, fetch_with, render_history, FetchRequest, FetchTarget, HttpTransport};
use refquality::metrics::{odds_ratio_improvement, render_series, yearly_series, Dataset, Metric, ScoredPage, YearRange};
use refquality::perennial::{coverage, lifespan_analysis, DomainSet, LifespanGroup, LifespanReport, PerennialList};
use refquality::pipeline::{Pipeline, ScoredCorpus};
use refquality::quasiexp::{
    balance, build_units, effect, propensity, render_balance, render_effects, Design, Experiment, MatchOptions, MatchUnit,
    Matching, Method, PropensityOptions,
};
use refquality::tsv;
use refquality::wikitext::{parse_article, ParseConfig, SuffixList};

use crate::config::{
    config_error, keyword, metric_set, outcome_metric, parse_cutoff, Command, ConfigError, CoverageArgs, FetchArgs,
    LifespanArgs, MatchArgs, MetricsArgs, ModelOpts, ParseArgs, ParseOpts, ReportArgs, RunArgs, ScoreArgs,
    DEFAULT_EXCLUSIONS,
};
use crate::output::OutputSet;

/// Failure of a named stage, or a configuration problem found while
/// loading inputs.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Stage { stage: &'static str, source: anyhow::Error },
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Stage { stage, source } => write!(f, "stage `{stage}` failed: {source:#}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T, E: Into<anyhow::Error>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|e| RunError::Stage { stage, source: e.into() })
    }
}

type Run = Result<(), RunError>;

pub fn execute(command: &Command, out: &mut dyn Write) -> Run {
    match command {
        Command::Fetch(a) => fetch(a, out),
        Command::Parse(a) => parse(a, out),
        Command::Score(a) => score(a, out),
        Command::Metrics(a) => metrics(a, out),
        Command::Lifespan(a) => lifespan(a, out),
        Command::Coverage(a) => coverage_cmd(a, out),
        Command::Match(a) => match_cmd(a, out),
        Command::Report(a) => report(a, out),
        Command::Run(a) => run(a, out),
    }
}

fn summary(out: &mut dyn Write, stage: &str, fields: &[(&str, String)]) -> Run {
    let mut line = format!("stage={stage}");
    for (k, v) in fields {
        line.push_str(&format!(" {k}={v}"));
    }
    writeln!(out, "{line}").stage("output")
}

fn iso(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn dir_or_bail(path: &Option<std::path::PathBuf>) -> Result<&Path, ConfigError> {
    path.as_deref().ok_or_else(|| config_error("out", "required"))
}

fn parse_config(opts: &ParseOpts) -> Result<ParseConfig, RunError> {
    let mut cfg = ParseConfig::default();
    if let Some(p) = &opts.excluded_sections {
        cfg = cfg.load_excluded_sections(p).stage("load")?;
    }
    if let Some(p) = &opts.abbreviations {
        cfg = cfg.load_abbreviations(p).stage("load")?;
    }
    if let Some(p) = &opts.suffixes {
        cfg = cfg.with_suffixes(SuffixList::from_file(p).stage("load")?);
    }
    Ok(cfg)
}

fn scorer(opts: &ModelOpts) -> Result<Scorer, RunError> {
    let table = match &opts.embeddings {
        Some(p) => EmbeddingTable::load(p).stage("load")?,
        None => citation_need::bundled_table().clone(),
    };
    let mut model = match &opts.model {
        Some(p) => LogisticNeedModel::load(p).stage("load")?,
        None => citation_need::bundled_model().clone(),
    };
    if let Some(t) = opts.threshold {
        model = model.with_threshold(t).map_err(|e| config_error("threshold", e.to_string()))?;
    }
    Scorer::new(table, model).map_err(|e| config_error("model", e.to_string()).into())
}

fn corpus(path: &Option<std::path::PathBuf>, topics: Option<&Path>) -> Result<Vec<PageRecord>, RunError> {
    let path = path.as_deref().ok_or_else(|| config_error("in", "required"))?;
    let mut pages = load_corpus(path, CorpusFormat::JsonLines).stage("load")?;
    if let Some(t) = topics {
        attach_topics(&mut pages, &load_topics(t).stage("load")?);
    }
    Ok(pages)
}

fn perennial(path: &Option<std::path::PathBuf>) -> Result<PerennialList, RunError> {
    let path = path.as_deref().ok_or_else(|| config_error("perennial", "required"))?;
    PerennialList::load(path).stage("load")
}

fn revision_count(pages: &[PageRecord]) -> usize {
    pages.iter().map(|p| p.revisions.len()).sum()
}

fn score_pages(
    pages: &[PageRecord],
    model: &ModelOpts,
    parse: &ParseOpts,
    list: &PerennialList,
    keep_rows: bool,
) -> Result<ScoredCorpus, RunError> {
    let scorer = scorer(model)?;
    let cfg = parse_config(parse)?;
    Pipeline::new(&scorer, &cfg, list).score_corpus(pages, keep_rows).stage("score")
}

fn fetch(a: &FetchArgs, out: &mut dyn Write) -> Run {
    let mut titles = a.titles.clone();
    if let Some(p) = &a.titles_file {
        let text = std::fs::read_to_string(p).stage("load")?;
        titles.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
    }
    let req = FetchRequest {
        target: FetchTarget::Titles(titles.clone()),
        endpoint: a.endpoint.clone(),
        batch_size: a.batch_size,
        max_parallel: a.max_parallel,
        backoff: Duration::from_millis(500),
    };
    let transport = HttpTransport::new(Duration::from_secs(60)).stage("fetch")?;
    let result = fetch_with(&req, &transport).stage("fetch")?;

    let dir = dir_or_bail(&a.out)?;
    let mut pages = tsv::row(["page_id", "title", "wikitext"]);
    for (id, text) in &result.pages {
        let title = result.titles.get(id).map(String::as_str).unwrap_or("");
        pages.push_str(&tsv::row([id.to_string(), title.to_string(), text.clone()]));
    }
    let mut skipped = tsv::row(["title"]);
    for t in &result.skipped {
        skipped.push_str(&tsv::row([t.as_str()]));
    }
    let mut set = OutputSet::new();
    set.add(&dir.join("pages.tsv"), &pages).stage("output")?;
    set.add(&dir.join("skipped.tsv"), &skipped).stage("output")?;
    set.commit().stage("output")?;
    summary(out, "fetch", &[
        ("requested", titles.len().to_string()),
        ("pages", result.pages.len().to_string()),
        ("skipped", result.skipped.len().to_string()),
    ])
}

fn parse(a: &ParseArgs, out: &mut dyn Write) -> Run {
    let pages = corpus(&a.input, None)?;
    let cfg = parse_config(&a.parse)?;
    let mut sentences =
        tsv::row(["page_id", "revision_id", "section_title", "position", "paragraph_index", "has_citation", "sentence"]);
    let mut references = tsv::row(["page_id", "revision_id", "position", "host", "domain", "url"]);
    let (mut n_sent, mut n_ref, mut bad) = (0usize, 0usize, 0usize);
    for page in &pages {
        for rev in &page.revisions {
            let text = rev
                .wikitext
                .as_deref()
                .ok_or_else(|| anyhow!("revision {} of page {} has no wikitext", rev.revision_id, page.page_id))
                .stage("parse")?;
            let parsed = parse_article(text, &cfg);
            let ids = [page.page_id.to_string(), rev.revision_id.to_string()];
            for s in &parsed.sentences {
                sentences.push_str(&tsv::row([
                    ids[0].clone(),
                    ids[1].clone(),
                    s.section_title.clone(),
                    s.position.to_string(),
                    s.paragraph_index.to_string(),
                    u8::from(s.has_citation).to_string(),
                    s.text.clone(),
                ]));
            }
            for r in &parsed.references {
                references.push_str(&tsv::row([
                    ids[0].clone(),
                    ids[1].clone(),
                    r.sentence_position.map_or_else(|| "-".to_string(), |p| p.to_string()),
                    r.host.clone(),
                    r.domain.clone(),
                    r.raw_url.clone(),
                ]));
            }
            n_sent += parsed.sentences.len();
            n_ref += parsed.references.len();
            bad += parsed.unparseable_urls;
        }
    }
    let dir = dir_or_bail(&a.out)?;
    let mut set = OutputSet::new();
    set.add(&dir.join("sentences.tsv"), &sentences).stage("output")?;
    set.add(&dir.join("references.tsv"), &references).stage("output")?;
    set.commit().stage("output")?;
    summary(out, "parse", &[
        ("pages", pages.len().to_string()),
        ("revisions", revision_count(&pages).to_string()),
        ("sentences", n_sent.to_string()),
        ("references", n_ref.to_string()),
        ("unparseable_urls", bad.to_string()),
    ])
}

fn score(a: &ScoreArgs, out: &mut dyn Write) -> Run {
    let pages = corpus(&a.input, None)?;
    let empty = PerennialList::new(Vec::new(), DateTime::<Utc>::UNIX_EPOCH).expect("empty list");
    let scored = score_pages(&pages, &a.model, &a.parse, &empty, true)?;
    let path = a.out.as_deref().ok_or_else(|| config_error("out", "required"))?;
    let mut set = OutputSet::new();
    set.add(path, &citation_need::render_rows(&scored.needing)).stage("output")?;
    set.commit().stage("output")?;
    let need: usize = scored.pages.iter().flat_map(|p| &p.scores).map(|s| s.n_need).sum();
    summary(out, "score", &[
        ("pages", pages.len().to_string()),
        ("revisions", revision_count(&pages).to_string()),
        ("needing", need.to_string()),
        ("rows", scored.needing.len().to_string()),
    ])
}

fn render_scores(pages: &[ScoredPage]) -> String {
    let mut s = tsv::row([
        "page_id",
        "revision_id",
        "timestamp",
        "n_need",
        "n_need_cited",
        "rn",
        "n_citations",
        "n_risky",
        "rr",
    ]);
    for p in pages {
        for (rev, q) in p.page.revisions.iter().zip(&p.scores) {
            s.push_str(&tsv::row([
                p.page.page_id.to_string(),
                q.revision_id.to_string(),
                iso(rev.timestamp),
                q.n_need.to_string(),
                q.n_need_cited.to_string(),
                tsv::opt_f64(q.rn),
                q.n_citations.to_string(),
                q.n_risky.to_string(),
                tsv::opt_f64(q.rr),
            ]));
        }
    }
    s
}

struct SeriesSpec {
    metrics: Vec<Metric>,
    topic: Option<MetaTopic>,
    dataset: Dataset,
    range: YearRange,
}

fn series(pages: &[ScoredPage], spec: &SeriesSpec) -> Vec<refquality::metrics::TimeSeriesPoint> {
    spec.metrics.iter().flat_map(|m| yearly_series(pages, *m, spec.topic, spec.dataset, spec.range)).collect()
}

fn metrics(a: &MetricsArgs, out: &mut dyn Write) -> Run {
    let spec = SeriesSpec {
        metrics: metric_set(&a.metric)?,
        topic: a.topic.as_deref().map(|t| keyword("topic", t)).transpose()?,
        dataset: keyword("dataset", &a.dataset)?,
        range: YearRange { from: a.from_year, to: a.to_year },
    };
    let pages = corpus(&a.input, a.topics.as_deref())?;
    let list = perennial(&a.perennial)?;
    let scored = score_pages(&pages, &a.model, &a.parse, &list, false)?;
    let points = series(&scored.pages, &spec);
    let dir = dir_or_bail(&a.out)?;
    let mut set = OutputSet::new();
    set.add(&dir.join("scores.tsv"), &render_scores(&scored.pages)).stage("output")?;
    set.add(&dir.join("series.tsv"), &render_series(&points)).stage("output")?;
    set.commit().stage("output")?;
    summary(out, "metrics", &[
        ("pages", pages.len().to_string()),
        ("revisions", revision_count(&pages).to_string()),
        ("series_points", points.len().to_string()),
        ("unparseable_urls", scored.unparseable_urls.to_string()),
    ])
}

fn exclusions(path: &Option<std::path::PathBuf>, none: bool) -> Result<HashSet<String>, RunError> {
    if none {
        return Ok(HashSet::new());
    }
    Ok(match path {
        Some(p) => DomainSet::load(p).stage("load")?.iter().map(String::from).collect(),
        None => DEFAULT_EXCLUSIONS.iter().map(|s| s.to_string()).collect(),
    })
}

fn lifespan_tables(report: &LifespanReport) -> (String, String, String) {
    let mut samples = tsv::row(["group", "lifespan_days", "page_id", "domain", "added_at", "removed_at"]);
    for s in &report.samples {
        let o = &s.occurrence;
        samples.push_str(&tsv::row([
            s.group.to_string(),
            s.lifespan_days.to_string(),
            o.page_id.to_string(),
            o.domain.clone(),
            iso(o.added_at),
            o.removed_at.map_or_else(|| "-".to_string(), iso),
        ]));
    }
    let mut summary = tsv::row(["group", "n", "median_days", "p75_days"]);
    let mut ecdf = tsv::row(["group", "lifespan_days", "cdf"]);
    for g in [LifespanGroup::Before, LifespanGroup::After] {
        let s = report.group(g);
        summary.push_str(&tsv::row([g.to_string(), s.n().to_string(), tsv::opt_f64(s.median), tsv::opt_f64(s.p75)]));
        for (x, f) in s.ecdf.steps() {
            ecdf.push_str(&tsv::row([g.to_string(), x.to_string(), f.to_string()]));
        }
    }
    summary.push_str(&tsv::row(["median_drop".to_string(), "-".into(), tsv::opt_f64(report.median_drop()), "-".into()]));
    (samples, summary, ecdf)
}

fn lifespan_stage(
    pages: &[PageRecord],
    list: &PerennialList,
    parse: &ParseOpts,
    excluded: &HashSet<String>,
    window_days: i64,
    dir: &Path,
    set: &mut OutputSet,
) -> Result<Vec<(&'static str, String)>, RunError> {
    let cfg = parse_config(parse)?;
    let history = build_reference_history_with(pages, list, &cfg).stage("lifespan")?;
    let report = lifespan_analysis(&history, window_days, excluded);
    let (samples, summary_tsv, ecdf) = lifespan_tables(&report);
    set.add(&dir.join("history.tsv"), &render_history(&history)).stage("output")?;
    set.add(&dir.join("lifespan.tsv"), &samples).stage("output")?;
    set.add(&dir.join("summary.tsv"), &summary_tsv).stage("output")?;
    set.add(&dir.join("ecdf.tsv"), &ecdf).stage("output")?;
    Ok(vec![
        ("occurrences", history.len().to_string()),
        ("before", report.before.n().to_string()),
        ("after", report.after.n().to_string()),
        ("unclassified", report.unclassified.to_string()),
        ("median_before", tsv::opt_f64(report.before.median)),
        ("median_after", tsv::opt_f64(report.after.median)),
        ("median_drop", tsv::opt_f64(report.median_drop())),
    ])
}

fn lifespan(a: &LifespanArgs, out: &mut dyn Write) -> Run {
    let pages = corpus(&a.input, None)?;
    let list = perennial(&a.perennial)?;
    let excluded = exclusions(&a.exclusions, a.no_exclusions)?;
    let dir = dir_or_bail(&a.out)?;
    let mut set = OutputSet::new();
    let fields = lifespan_stage(&pages, &list, &a.parse, &excluded, a.window_days, dir, &mut set)?;
    set.commit().stage("output")?;
    summary(out, "lifespan", &fields)
}

fn coverage_cmd(a: &CoverageArgs, out: &mut dyn Write) -> Run {
    let list_path = a.list.as_deref().ok_or_else(|| config_error("list", "required"))?;
    let text = std::fs::read_to_string(list_path).stage("load")?;
    let perennial_format = match a.list_format.as_str() {
        "perennial" => true,
        "domains" => false,
        _ => text.lines().any(|l| !l.trim_start().starts_with('#') && l.contains('\t')),
    };
    let domains = if perennial_format {
        let list = PerennialList::parse(&text).stage("load")?;
        if a.risky_only {
            list.risky_domains()
        } else {
            list.domains()
        }
    } else if a.risky_only {
        return Err(config_error("risky-only", "needs a perennial list").into());
    } else {
        DomainSet::parse(&text)
    };
    let cutoff = a.cutoff.as_deref().map(parse_cutoff).transpose()?;
    // parse options only affect which URLs normalize; validate them anyway
    parse_config(&a.parse)?;
    let pages = corpus(&a.input, None)?;
    let pct = coverage(&pages, &domains, cutoff).stage("coverage")?;
    if let Some(path) = &a.out {
        let mut set = OutputSet::new();
        let body = tsv::row(["pages", "domains", "cutoff", "coverage_pct"])
            + &tsv::row([
                pages.len().to_string(),
                domains.len().to_string(),
                cutoff.map_or_else(|| "-".to_string(), iso),
                pct.to_string(),
            ]);
        set.add(path, &body).stage("output")?;
        set.commit().stage("output")?;
    }
    summary(out, "coverage", &[
        ("pages", pages.len().to_string()),
        ("domains", domains.len().to_string()),
        ("coverage_pct", pct.to_string()),
    ])
}

struct MatchSpec {
    experiment: Experiment,
    options: MatchOptions,
    ridge: f64,
}

fn matching(units: &[MatchUnit], spec: &MatchSpec) -> Result<Matching, RunError> {
    let scores = match spec.experiment.method {
        Method::Psm => {
            let opts = PropensityOptions::with_ridge(spec.ridge);
            Some(propensity(units, &opts).stage("match")?.scores)
        }
        Method::Mdm => None,
    };
    refquality::quasiexp::match_units(units, scores.as_deref(), &spec.options).stage("match")
}

fn render_pairs(units: &[MatchUnit], m: &Matching) -> String {
    let mut s = tsv::row([
        "treated_revision_id",
        "control_revision_id",
        "distance",
        "treated_outcome",
        "control_outcome",
    ]);
    for p in &m.pairs {
        let (t, c) = (&units[p.treated], &units[p.control]);
        s.push_str(&tsv::row([
            t.revision_id.to_string(),
            c.revision_id.to_string(),
            p.distance.to_string(),
            t.outcome.to_string(),
            c.outcome.to_string(),
        ]));
    }
    s
}

/// Runs one matched comparison and stages its three tables under `prefix`.
fn match_stage(
    scored: &[ScoredPage],
    raw: &[PageRecord],
    spec: &MatchSpec,
    dir: &Path,
    prefix: &str,
    set: &mut OutputSet,
) -> Result<Vec<(&'static str, String)>, RunError> {
    let partition = partition_editors(raw);
    let e = spec.experiment;
    let units = build_units(scored, &partition, e.design, e.metric);
    let m = matching(&units, spec)?;
    let bal = balance(&units, &m, e).stage("match")?;
    let eff = effect(&units, &m, e).stage("match")?;
    set.add(&dir.join(format!("{prefix}effect.tsv")), &render_effects(std::slice::from_ref(&eff))).stage("output")?;
    set.add(&dir.join(format!("{prefix}balance.tsv")), &render_balance(std::slice::from_ref(&bal))).stage("output")?;
    set.add(&dir.join(format!("{prefix}pairs.tsv")), &render_pairs(&units, &m)).stage("output")?;
    Ok(vec![
        ("units", units.len().to_string()),
        ("pairs", m.pairs.len().to_string()),
        ("unmatched", m.unmatched_treated.to_string()),
        ("max_abs_smd_after", bal.max_abs_smd_after().to_string()),
        ("t", eff.t.to_string()),
        ("p", eff.p.to_string()),
    ])
}

fn match_cmd(a: &MatchArgs, out: &mut dyn Write) -> Run {
    let method: Method = keyword("method", &a.method)?;
    let spec = MatchSpec {
        experiment: Experiment {
            dataset: keyword("dataset", &a.dataset)?,
            metric: outcome_metric(&a.metric)?,
            design: keyword("design", &a.design)?,
            method,
        },
        options: MatchOptions { method, seed: a.seed, caliper: a.caliper, replacement: a.replacement },
        ridge: a.ridge,
    };
    let pages = corpus(&a.input, a.topics.as_deref())?;
    let list = perennial(&a.perennial)?;
    let scored = score_pages(&pages, &a.model, &a.parse, &list, false)?;
    let dir = dir_or_bail(&a.out)?;
    let mut set = OutputSet::new();
    let fields = match_stage(&scored.pages, &pages, &spec, dir, "", &mut set)?;
    set.commit().stage("output")?;
    summary(out, "match", &fields)
}

fn render_odds(rows: &[(Metric, refquality::metrics::ImprovementOdds)]) -> String {
    let mut s = tsv::row([
        "metric",
        "top_improved",
        "top_not_improved",
        "random_improved",
        "random_not_improved",
        "odds_ratio",
        "corrected",
        "skipped_pages",
    ]);
    for (m, o) in rows {
        s.push_str(&tsv::row([
            m.to_string(),
            o.top_improved.to_string(),
            o.top_not_improved.to_string(),
            o.random_improved.to_string(),
            o.random_not_improved.to_string(),
            o.odds.value.to_string(),
            o.odds.corrected.to_string(),
            o.skipped_pages.to_string(),
        ]));
    }
    s
}

fn report(a: &ReportArgs, out: &mut dyn Write) -> Run {
    let metrics = metric_set(&a.metric)?;
    let list = perennial(&a.perennial)?;
    let top = corpus(&a.top, a.topics.as_deref()).map_err(|e| rename_field(e, "in", "top"))?;
    let random = corpus(&a.random, a.topics.as_deref()).map_err(|e| rename_field(e, "in", "random"))?;
    let top = score_pages(&top, &a.model, &a.parse, &list, false)?.pages;
    let random = score_pages(&random, &a.model, &a.parse, &list, false)?.pages;
    let mut odds = Vec::new();
    for m in &metrics {
        odds.push((*m, odds_ratio_improvement(&top, &random, *m).stage("report")?));
    }
    let mut points = Vec::new();
    for (pages, dataset) in [(&top, Dataset::Top), (&random, Dataset::Random)] {
        let spec = SeriesSpec { metrics: metrics.clone(), topic: None, dataset, range: YearRange::default() };
        points.extend(series(pages, &spec));
    }
    let dir = dir_or_bail(&a.out)?;
    let mut set = OutputSet::new();
    set.add(&dir.join("odds.tsv"), &render_odds(&odds)).stage("output")?;
    set.add(&dir.join("series.tsv"), &render_series(&points)).stage("output")?;
    set.commit().stage("output")?;
    let mut fields = vec![("top_pages", top.len().to_string()), ("random_pages", random.len().to_string())];
    for (m, o) in &odds {
        fields.push((if *m == Metric::Rn { "odds_rn" } else { "odds_rr" }, o.odds.value.to_string()));
    }
    summary(out, "report", &fields)
}

fn rename_field(e: RunError, from: &str, to: &str) -> RunError {
    match e {
        RunError::Config(c) if c.field == from => RunError::Config(config_error(to, c.message)),
        other => other,
    }
}

fn run(a: &RunArgs, out: &mut dyn Write) -> Run {
    let dataset: Dataset = keyword("dataset", &a.dataset)?;
    let pages = corpus(&a.input, a.topics.as_deref())?;
    let list = perennial(&a.perennial)?;
    let excluded = exclusions(&a.exclusions, a.no_exclusions)?;
    let dir = dir_or_bail(&a.out)?;
    let mut set = OutputSet::new();

    let scored = score_pages(&pages, &a.model, &a.parse, &list, true)?;
    set.add(&dir.join("needing.tsv"), &citation_need::render_rows(&scored.needing)).stage("output")?;
    summary(out, "score", &[
        ("pages", pages.len().to_string()),
        ("revisions", revision_count(&pages).to_string()),
        ("rows", scored.needing.len().to_string()),
    ])?;

    let spec =
        SeriesSpec { metrics: vec![Metric::Rn, Metric::Rr], topic: None, dataset, range: YearRange::default() };
    let points = series(&scored.pages, &spec);
    set.add(&dir.join("scores.tsv"), &render_scores(&scored.pages)).stage("output")?;
    set.add(&dir.join("series.tsv"), &render_series(&points)).stage("output")?;
    summary(out, "metrics", &[("series_points", points.len().to_string())])?;

    let fields = lifespan_stage(&pages, &list, &a.parse, &excluded, a.window_days, dir, &mut set)?;
    summary(out, "lifespan", &fields)?;

    if !a.no_match {
        for metric in [Metric::Rn, Metric::Rr] {
            let spec = MatchSpec {
                experiment: Experiment { dataset, metric, design: Design::Expertise, method: Method::Psm },
                options: MatchOptions { seed: a.seed, ..MatchOptions::default() },
                ridge: 0.0,
            };
            let prefix = format!("match_d{metric}_");
            let fields = match_stage(&scored.pages, &pages, &spec, dir, &prefix, &mut set)?;
            let mut fields = fields;
            fields.insert(0, ("metric", format!("d{metric}")));
            summary(out, "match", &fields)?;
        }
    }
    let written = set.commit().stage("output")?;
    summary(out, "run", &[("files", written.len().to_string())])
}
