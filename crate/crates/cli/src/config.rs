//! Command-line definitions and config-file merging.
//!
//! Precedence is flags, then the `--config` TOML file, then built-in
//! defaults. The file holds one table per subcommand, e.g. `[score]`, whose
//! keys are the long flag names (`batch-size` or `batch_size`).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use refquality::metrics::{Dataset, Metric};
use refquality::quasiexp::{Design, Method};

pub const DEFAULT_ENDPOINT: &str = "https://en.wikipedia.org/w/api.php";

/// A rejected configuration value; `field` is the flag or config key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration for `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Parser)]
#[command(name = "refquality", version, about = "Reference need and reference risk analysis of wiki revision histories")]
pub struct Cli {
    /// TOML file with one table of defaults per subcommand
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Download the current wikitext of pages from a MediaWiki API
    Fetch(FetchArgs),
    /// Split every revision into sentences and extract cited domains
    Parse(ParseArgs),
    /// Write the sentences classified as needing a citation
    Score(ScoreArgs),
    /// Per-revision RN/RR scores and their yearly series
    Metrics(MetricsArgs),
    /// Lifespans of risky references before and after classification
    Lifespan(LifespanArgs),
    /// Share of pages citing at least one listed domain
    Coverage(CoverageArgs),
    /// Matched comparison of revisions by expertise or exposure
    Match(MatchArgs),
    /// Improvement odds of top-viewed over random pages
    Report(ReportArgs),
    /// Score, metrics, lifespan and match stages on one corpus
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fetch(_) => "fetch",
            Command::Parse(_) => "parse",
            Command::Score(_) => "score",
            Command::Metrics(_) => "metrics",
            Command::Lifespan(_) => "lifespan",
            Command::Coverage(_) => "coverage",
            Command::Match(_) => "match",
            Command::Report(_) => "report",
            Command::Run(_) => "run",
        }
    }
}

/// Parsing knobs shared by every stage that reads wikitext.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ParseOpts {
    /// Extra section titles to skip, one per line [default: bundled list only]
    #[arg(long, value_name = "FILE")]
    pub excluded_sections: Option<PathBuf>,
    /// Extra abbreviations for sentence splitting, one per line [default: bundled list only]
    #[arg(long, value_name = "FILE")]
    pub abbreviations: Option<PathBuf>,
    /// Public suffix list replacing the bundled snapshot [default: bundled snapshot]
    #[arg(long, value_name = "FILE")]
    pub suffixes: Option<PathBuf>,
}

/// Citation-need classifier files.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelOpts {
    /// Classifier weights [default: bundled model]
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Word vectors [default: bundled vectors]
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Decision threshold in (0,1) [default: threshold stored in the model file, 0.5 for the bundled model]
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FetchArgs {
    /// Page titles, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub titles: Vec<String>,
    /// File with one title per line
    #[arg(long, value_name = "FILE")]
    pub titles_file: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    pub endpoint: String,
    /// Titles per request
    #[arg(long, default_value_t = 20)]
    pub batch_size: usize,
    /// Requests in flight at once
    #[arg(long, default_value_t = 4)]
    pub max_parallel: usize,
    /// Output directory for pages.tsv and skipped.tsv
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ParseArgs {
    /// Corpus of revision records, one JSON object per line
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub parse: ParseOpts,
    /// Output directory for sentences.tsv and references.tsv
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScoreArgs {
    /// Corpus of revision records, one JSON object per line
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub parse: ParseOpts,
    /// Output TSV of sentences needing a citation
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MetricsArgs {
    /// Corpus of revision records, one JSON object per line
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Tab-separated page_id, topic, meta_topic labels
    #[arg(long, value_name = "FILE")]
    pub topics: Option<PathBuf>,
    /// Perennial sources list (domain, label, classified_at)
    #[arg(long, value_name = "FILE")]
    pub perennial: Option<PathBuf>,
    /// rn, rr or both
    #[arg(long, default_value = "both")]
    pub metric: String,
    /// Restrict the series to one meta-topic [default: all pages]
    #[arg(long)]
    pub topic: Option<String>,
    #[arg(long)]
    pub from_year: Option<i32>,
    #[arg(long)]
    pub to_year: Option<i32>,
    /// Dataset tag written to the series: top, random or current
    #[arg(long, default_value = "current")]
    pub dataset: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub parse: ParseOpts,
    /// Output directory for scores.tsv and series.tsv
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_EXCLUSIONS: [&str; 2] = ["dailymail.co.uk", "thesun.co.uk"];

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LifespanArgs {
    /// Corpus of revision records, one JSON object per line
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Perennial sources list (domain, label, classified_at)
    #[arg(long, value_name = "FILE")]
    pub perennial: Option<PathBuf>,
    /// Domains left out of the analysis, one per line [default: dailymail.co.uk, thesun.co.uk]
    #[arg(long, value_name = "FILE")]
    pub exclusions: Option<PathBuf>,
    /// Keep every domain, ignoring the exclusion list
    #[arg(long)]
    pub no_exclusions: bool,
    /// Days on either side of the classification date
    #[arg(long, default_value_t = 365)]
    pub window_days: i64,
    #[command(flatten)]
    #[serde(flatten)]
    pub parse: ParseOpts,
    /// Output directory for history.tsv, lifespan.tsv, summary.tsv and ecdf.tsv
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CoverageArgs {
    /// Corpus of revision records, one JSON object per line
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Perennial list or plain domain list
    #[arg(long, value_name = "FILE")]
    pub list: Option<PathBuf>,
    /// auto, perennial or domains
    #[arg(long, default_value = "auto")]
    pub list_format: String,
    /// Count only domains with a risky label (perennial lists)
    #[arg(long)]
    pub risky_only: bool,
    /// Evaluate each page as of this instant (YYYY-MM-DD or RFC 3339) [default: latest revision]
    #[arg(long)]
    pub cutoff: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub parse: ParseOpts,
    /// Output TSV with the coverage figure [default: summary line only]
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MatchArgs {
    /// Corpus of revision records, one JSON object per line
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Tab-separated page_id, topic, meta_topic labels
    #[arg(long, value_name = "FILE")]
    pub topics: Option<PathBuf>,
    /// Perennial sources list (domain, label, classified_at)
    #[arg(long, value_name = "FILE")]
    pub perennial: Option<PathBuf>,
    /// expertise or interaction
    #[arg(long, default_value = "expertise")]
    pub design: String,
    /// psm or mdm
    #[arg(long, default_value = "psm")]
    pub method: String,
    /// drn or drr
    #[arg(long, default_value = "drn")]
    pub metric: String,
    /// Seed for the order in which treated units are matched
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest admissible match distance [default: none]
    #[arg(long)]
    pub caliper: Option<f64>,
    /// Allow a control unit to be reused
    #[arg(long)]
    pub replacement: bool,
    /// L2 penalty for the propensity model
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    /// Dataset tag: top, random or current
    #[arg(long, default_value = "current")]
    pub dataset: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub parse: ParseOpts,
    /// Output directory for effect.tsv, balance.tsv and pairs.tsv
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Corpus of top-viewed pages
    #[arg(long, value_name = "FILE")]
    pub top: Option<PathBuf>,
    /// Corpus of randomly sampled pages
    #[arg(long, value_name = "FILE")]
    pub random: Option<PathBuf>,
    /// Tab-separated page_id, topic, meta_topic labels
    #[arg(long, value_name = "FILE")]
    pub topics: Option<PathBuf>,
    /// Perennial sources list (domain, label, classified_at)
    #[arg(long, value_name = "FILE")]
    pub perennial: Option<PathBuf>,
    /// rn, rr or both
    #[arg(long, default_value = "both")]
    pub metric: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub parse: ParseOpts,
    /// Output directory for odds.tsv and series.tsv
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RunArgs {
    /// Corpus of revision records, one JSON object per line
    #[arg(long = "in", value_name = "FILE")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Tab-separated page_id, topic, meta_topic labels
    #[arg(long, value_name = "FILE")]
    pub topics: Option<PathBuf>,
    /// Perennial sources list (domain, label, classified_at)
    #[arg(long, value_name = "FILE")]
    pub perennial: Option<PathBuf>,
    /// Domains left out of the lifespan analysis [default: dailymail.co.uk, thesun.co.uk]
    #[arg(long, value_name = "FILE")]
    pub exclusions: Option<PathBuf>,
    #[arg(long)]
    pub no_exclusions: bool,
    #[arg(long, default_value_t = 365)]
    pub window_days: i64,
    /// Dataset tag: top, random or current
    #[arg(long, default_value = "current")]
    pub dataset: String,
    /// Seed for matching
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the match stage
    #[arg(long)]
    pub no_match: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub parse: ParseOpts,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// A validated command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
}

/// Parses `args` (program name first) and folds in the config file.
pub fn parse_args<I, T>(args: I) -> Result<RunConfig, CliParseError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = Cli::command().try_get_matches_from(args).map_err(CliParseError::Clap)?;
    let cli = Cli::from_arg_matches(&matches).map_err(CliParseError::Clap)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let table = match &cli.config {
        Some(path) => Some(load_section(path, name)?),
        None => None,
    };
    let command = match table {
        None => cli.command,
        Some(table) => apply(cli.command, sub, &table)?,
    };
    validate(&command)?;
    Ok(RunConfig { command })
}

#[derive(Debug)]
pub enum CliParseError {
    Clap(clap::Error),
    Config(ConfigError),
}

impl From<ConfigError> for CliParseError {
    fn from(e: ConfigError) -> Self {
        CliParseError::Config(e)
    }
}

const SUBCOMMANDS: [&str; 9] = ["fetch", "parse", "score", "metrics", "lifespan", "coverage", "match", "report", "run"];

fn load_section(path: &Path, name: &str) -> Result<toml::Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
    let doc: toml::Table = text.parse().map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
    let mut section = toml::Table::new();
    for (key, value) in doc {
        if !SUBCOMMANDS.contains(&key.as_str()) {
            return Err(config_error(&key, "unknown section in config file"));
        }
        if key == name {
            section = match value {
                toml::Value::Table(t) => t,
                _ => return Err(config_error(&key, "expected a table")),
            };
        }
    }
    Ok(section)
}

fn apply(command: Command, sub: &ArgMatches, table: &toml::Table) -> Result<Command, ConfigError> {
    Ok(match command {
        Command::Fetch(a) => Command::Fetch(merge(a, sub, table, "fetch")?),
        Command::Parse(a) => Command::Parse(merge(a, sub, table, "parse")?),
        Command::Score(a) => Command::Score(merge(a, sub, table, "score")?),
        Command::Metrics(a) => Command::Metrics(merge(a, sub, table, "metrics")?),
        Command::Lifespan(a) => Command::Lifespan(merge(a, sub, table, "lifespan")?),
        Command::Coverage(a) => Command::Coverage(merge(a, sub, table, "coverage")?),
        Command::Match(a) => Command::Match(merge(a, sub, table, "match")?),
        Command::Report(a) => Command::Report(merge(a, sub, table, "report")?),
        Command::Run(a) => Command::Run(merge(a, sub, table, "run")?),
    })
}

/// Overlays config keys on every field not given on the command line.
fn merge<T: Serialize + DeserializeOwned>(
    args: T,
    matches: &ArgMatches,
    table: &toml::Table,
    name: &str,
) -> Result<T, ConfigError> {
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(name).expect("known subcommand");
    let known: Vec<String> = sub.get_arguments().map(|a| a.get_id().to_string()).collect();
    let mut merged = match toml::Value::try_from(&args) {
        Ok(toml::Value::Table(t)) => t,
        Ok(_) => unreachable!("argument structs serialize to tables"),
        Err(e) => return Err(config_error(name, e.to_string())),
    };
    for (raw_key, value) in table {
        let key = raw_key.replace('-', "_");
        let id = if key == "in" { "input" } else { key.as_str() };
        if !known.iter().any(|k| k == id) || id == "config" {
            return Err(config_error(raw_key, "unknown key"));
        }
        if matches.value_source(id) == Some(ValueSource::CommandLine) {
            continue;
        }
        merged.insert(key.clone(), value.clone());
        toml::Value::Table(merged.clone())
            .try_into::<T>()
            .map_err(|e| config_error(raw_key, e.message().to_string()))?;
    }
    toml::Value::Table(merged).try_into::<T>().map_err(|e| config_error(name, e.message().to_string()))
}

fn require_file<'a>(field: &str, path: &'a Option<PathBuf>) -> Result<&'a Path, ConfigError> {
    let path = path.as_deref().ok_or_else(|| config_error(field, "required"))?;
    existing_file(field, path)?;
    Ok(path)
}

fn existing_file(field: &str, path: &Path) -> Result<(), ConfigError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(config_error(field, format!("no such file: {}", path.display())))
    }
}

fn optional_file(field: &str, path: &Option<PathBuf>) -> Result<(), ConfigError> {
    path.as_deref().map_or(Ok(()), |p| existing_file(field, p))
}

fn require_out(path: &Option<PathBuf>) -> Result<&Path, ConfigError> {
    path.as_deref().ok_or_else(|| config_error("out", "required"))
}

pub fn keyword<T: FromStr>(field: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| config_error(field, e.to_string()))
}

/// Metric selection for `metrics` and `report`.
pub fn metric_set(value: &str) -> Result<Vec<Metric>, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "both" => Ok(vec![Metric::Rn, Metric::Rr]),
        other => Ok(vec![keyword::<Metric>("metric", other)?]),
    }
}

/// `drn`/`drr` for `match`.
pub fn outcome_metric(value: &str) -> Result<Metric, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "drn" => Ok(Metric::Rn),
        "drr" => Ok(Metric::Rr),
        _ => Err(config_error("metric", format!("unknown outcome `{value}` (expected drn or drr)"))),
    }
}

pub fn parse_cutoff(value: &str) -> Result<DateTime<Utc>, ConfigError> {
    if let Ok(t) = DateTime::parse_from_rfc3339(value) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| config_error("cutoff", format!("`{value}` is neither YYYY-MM-DD nor RFC 3339")))
}

fn validate_parse(p: &ParseOpts) -> Result<(), ConfigError> {
    optional_file("excluded-sections", &p.excluded_sections)?;
    optional_file("abbreviations", &p.abbreviations)?;
    optional_file("suffixes", &p.suffixes)
}

fn validate_model(m: &ModelOpts) -> Result<(), ConfigError> {
    optional_file("model", &m.model)?;
    optional_file("embeddings", &m.embeddings)?;
    if let Some(t) = m.threshold {
        if !(t > 0.0 && t < 1.0) {
            return Err(config_error("threshold", format!("{t} is outside (0,1)")));
        }
    }
    Ok(())
}

fn validate_window(days: i64) -> Result<(), ConfigError> {
    if days <= 0 {
        return Err(config_error("window-days", "must be positive"));
    }
    Ok(())
}

/// Checks that referenced inputs exist and keyword values parse.
pub fn validate(command: &Command) -> Result<(), ConfigError> {
    match command {
        Command::Fetch(a) => {
            optional_file("titles-file", &a.titles_file)?;
            if a.titles.is_empty() && a.titles_file.is_none() {
                return Err(config_error("titles", "give --titles or --titles-file"));
            }
            if a.batch_size == 0 {
                return Err(config_error("batch-size", "must be positive"));
            }
            if a.max_parallel == 0 {
                return Err(config_error("max-parallel", "must be positive"));
            }
            require_out(&a.out)?;
        }
        Command::Parse(a) => {
            require_file("in", &a.input)?;
            validate_parse(&a.parse)?;
            require_out(&a.out)?;
        }
        Command::Score(a) => {
            require_file("in", &a.input)?;
            validate_model(&a.model)?;
            validate_parse(&a.parse)?;
            require_out(&a.out)?;
        }
        Command::Metrics(a) => {
            require_file("in", &a.input)?;
            optional_file("topics", &a.topics)?;
            require_file("perennial", &a.perennial)?;
            metric_set(&a.metric)?;
            if let Some(t) = &a.topic {
                keyword::<refquality::corpus::MetaTopic>("topic", t)?;
            }
            keyword::<Dataset>("dataset", &a.dataset)?;
            if let (Some(f), Some(t)) = (a.from_year, a.to_year) {
                if f > t {
                    return Err(config_error("from-year", format!("{f} is after --to-year {t}")));
                }
            }
            validate_model(&a.model)?;
            validate_parse(&a.parse)?;
            require_out(&a.out)?;
        }
        Command::Lifespan(a) => {
            require_file("in", &a.input)?;
            require_file("perennial", &a.perennial)?;
            optional_file("exclusions", &a.exclusions)?;
            validate_window(a.window_days)?;
            validate_parse(&a.parse)?;
            require_out(&a.out)?;
        }
        Command::Coverage(a) => {
            require_file("in", &a.input)?;
            require_file("list", &a.list)?;
            if !matches!(a.list_format.as_str(), "auto" | "perennial" | "domains") {
                return Err(config_error("list-format", format!("unknown format `{}`", a.list_format)));
            }
            if a.risky_only && a.list_format == "domains" {
                return Err(config_error("risky-only", "needs a perennial list"));
            }
            if let Some(c) = &a.cutoff {
                parse_cutoff(c)?;
            }
            validate_parse(&a.parse)?;
        }
        Command::Match(a) => {
            require_file("in", &a.input)?;
            optional_file("topics", &a.topics)?;
            require_file("perennial", &a.perennial)?;
            keyword::<Design>("design", &a.design)?;
            keyword::<Method>("method", &a.method)?;
            outcome_metric(&a.metric)?;
            keyword::<Dataset>("dataset", &a.dataset)?;
            if let Some(c) = a.caliper {
                if c.is_nan() || c <= 0.0 {
                    return Err(config_error("caliper", "must be positive"));
                }
            }
            if a.ridge.is_nan() || a.ridge < 0.0 {
                return Err(config_error("ridge", "must be non-negative"));
            }
            validate_model(&a.model)?;
            validate_parse(&a.parse)?;
            require_out(&a.out)?;
        }
        Command::Report(a) => {
            require_file("top", &a.top)?;
            require_file("random", &a.random)?;
            optional_file("topics", &a.topics)?;
            require_file("perennial", &a.perennial)?;
            metric_set(&a.metric)?;
            validate_model(&a.model)?;
            validate_parse(&a.parse)?;
            require_out(&a.out)?;
        }
        Command::Run(a) => {
            require_file("in", &a.input)?;
            optional_file("topics", &a.topics)?;
            require_file("perennial", &a.perennial)?;
            optional_file("exclusions", &a.exclusions)?;
            validate_window(a.window_days)?;
            keyword::<Dataset>("dataset", &a.dataset)?;
            validate_model(&a.model)?;
            validate_parse(&a.parse)?;
            require_out(&a.out)?;
        }
    }
    Ok(())
}
