//! Configuration and the `profile`, `generate`, `evaluate` and `session`
//! commands.
//!
//! Settings are layered: built-in defaults, then the TOML file named by
//! `--config`, then `PEERMIRROR_*` environment variables, then flags.
//! Every command returns an exit code: 0 success, 1 fatal, 2 partial.
//! Diagnostics go to stderr; records go to `--out` or stdout.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::client::{ChatBackend, OpenAiBackend, Recorder, ReplayBackend, ReqwestTransport, Retry, RetryPolicy};
use crate::evaluate::{self, ExperimentOptions, ExternalScorer, ProxyScorer, ReportFormat, Sample, Scorer};
use crate::mock::MockBackend;
use crate::pipeline::{Attempt, GenerationAudit, Method, Pipeline, PipelineConfig, ProfileAudit};
use crate::session::{self, PIPELINE_SENTINEL};
use crate::taxonomy::ErrorProfile;
use crate::edits::Edit;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

pub const ENV_API_KEY: &str = "PEERMIRROR_API_KEY";
pub const ENV_BASE_URL: &str = "PEERMIRROR_BASE_URL";
pub const ENV_MODEL: &str = "PEERMIRROR_MODEL";
pub const ENV_MODE: &str = "PEERMIRROR_MODE";
pub const ENV_FIXTURES: &str = "PEERMIRROR_FIXTURES";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("parsing config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Where completions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Call the API.
    Live,
    /// Call the API and append every exchange to the fixture file.
    Record,
    /// Serve responses from the fixture file only.
    Replay,
    /// The deterministic offline backend.
    Mock,
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            "mock" => Ok(Mode::Mock),
            other => Err(ConfigError::Invalid(format!(
                "unknown mode `{other}` (expected live, record, replay or mock)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Live => "live",
            Mode::Record => "record",
            Mode::Replay => "replay",
            Mode::Mock => "mock",
        })
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub model: String,
    pub analysis_temperature: f64,
    pub generation_temperature: f64,
    pub max_attempts: u32,
    pub tolerance: u32,
    pub proxy_k: f64,
    pub mode: Mode,
    pub fixture_path: Option<PathBuf>,
    /// Extra clean texts for the mock's correction stage (JSONL with `text`).
    pub references_path: Option<PathBuf>,
    /// `proxy`, or the name of an external adapter.
    pub scorer: String,
    pub api_key: Option<String>,
    pub base_url: Option<String>,
    pub retries: u32,
    pub jobs: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Config {
            model: p.model,
            analysis_temperature: p.analysis_temperature,
            generation_temperature: p.generation_temperature,
            max_attempts: p.max_attempts,
            tolerance: p.tolerance,
            proxy_k: evaluate::DEFAULT_PROXY_K,
            mode: Mode::Live,
            fixture_path: None,
            references_path: None,
            scorer: "proxy".into(),
            api_key: None,
            base_url: None,
            retries: RetryPolicy::default().retries,
            jobs: None,
        }
    }
}

/// The config file. Relative paths are taken from the file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub analysis_temperature: Option<f64>,
    pub generation_temperature: Option<f64>,
    pub max_attempts: Option<u32>,
    pub tolerance: Option<u32>,
    pub proxy_k: Option<f64>,
    pub mode: Option<Mode>,
    pub fixture_path: Option<PathBuf>,
    pub references_path: Option<PathBuf>,
    pub scorer: Option<String>,
    pub base_url: Option<String>,
    pub retries: Option<u32>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.fixture_path, &mut cfg.references_path].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Flags shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// live, record, replay or mock.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Fixture file for record and replay modes.
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
    /// Clean reference texts for mock mode.
    #[arg(long, global = true)]
    pub references: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub max_attempts: Option<u32>,
    #[arg(long, global = true)]
    pub tolerance: Option<u32>,
    #[arg(long, global = true)]
    pub proxy_k: Option<f64>,
    /// `proxy` or an external scorer name.
    #[arg(long, global = true)]
    pub scorer: Option<String>,
    /// Worker threads for per-record work.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

impl Config {
    /// Layers file, environment and flags over the defaults. `env` looks up
    /// a variable by name.
    pub fn resolve(
        file: Option<FileConfig>,
        env: impl Fn(&str) -> Option<String>,
        flags: &GlobalArgs,
    ) -> Result<Config, ConfigError> {
        let mut c = Config::default();
        if let Some(f) = file {
            macro_rules! take {
                ($($field:ident),*) => { $(if let Some(v) = f.$field { c.$field = v; })* };
            }
            take!(model, analysis_temperature, generation_temperature, max_attempts, tolerance, proxy_k, mode, scorer, retries);
            c.fixture_path = f.fixture_path.or(c.fixture_path);
            c.references_path = f.references_path.or(c.references_path);
            c.base_url = f.base_url.or(c.base_url);
            c.jobs = f.jobs.or(c.jobs);
        }
        let env = |name: &str| env(name).filter(|v| !v.trim().is_empty());
        c.api_key = env(ENV_API_KEY);
        if let Some(v) = env(ENV_BASE_URL) {
            c.base_url = Some(v);
        }
        if let Some(v) = env(ENV_MODEL) {
            c.model = v;
        }
        if let Some(v) = env(ENV_MODE) {
            c.mode = v.parse()?;
        }
        if let Some(v) = env(ENV_FIXTURES) {
            c.fixture_path = Some(v.into());
        }
        if let Some(v) = &flags.mode {
            c.mode = v.parse()?;
        }
        if let Some(v) = &flags.fixtures {
            c.fixture_path = Some(v.clone());
        }
        if let Some(v) = &flags.references {
            c.references_path = Some(v.clone());
        }
        if let Some(v) = &flags.model {
            c.model = v.clone();
        }
        if let Some(v) = &flags.scorer {
            c.scorer = v.clone();
        }
        c.max_attempts = flags.max_attempts.unwrap_or(c.max_attempts);
        c.tolerance = flags.tolerance.unwrap_or(c.tolerance);
        c.proxy_k = flags.proxy_k.unwrap_or(c.proxy_k);
        c.jobs = flags.jobs.or(c.jobs);
        c.validate()?;
        Ok(c)
    }

    /// Reads `--config` if given and the process environment.
    pub fn from_process(flags: &GlobalArgs) -> Result<Config, ConfigError> {
        let file = flags.config.as_deref().map(FileConfig::load).transpose()?;
        Config::resolve(file, |k| std::env::var(k).ok(), flags)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_attempts < 1 {
            return Err(ConfigError::Invalid("max_attempts must be at least 1".into()));
        }
        if !(self.proxy_k > 0.0) {
            return Err(ConfigError::Invalid(format!("proxy_k must be positive, got {}", self.proxy_k)));
        }
        if self.jobs == Some(0) {
            return Err(ConfigError::Invalid("jobs must be at least 1".into()));
        }
        if matches!(self.mode, Mode::Record | Mode::Replay) && self.fixture_path.is_none() {
            return Err(ConfigError::Invalid(format!(
                "{} mode needs a fixture file (--fixtures or {ENV_FIXTURES})",
                self.mode
            )));
        }
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            model: self.model.clone(),
            analysis_temperature: self.analysis_temperature,
            generation_temperature: self.generation_temperature,
            max_attempts: self.max_attempts,
            tolerance: self.tolerance,
            ..PipelineConfig::default()
        }
    }

    /// Builds the backend for the configured mode. Replay and mock never
    /// touch the network; live and record fail here without a key.
    pub fn backend(&self) -> anyhow::Result<Box<dyn ChatBackend>> {
        let live = || -> anyhow::Result<Retry<OpenAiBackend>> {
            let transport = ReqwestTransport::new(Duration::from_secs(120))?;
            let api = OpenAiBackend::new(self.api_key.clone(), self.base_url.clone(), Box::new(transport))?;
            let policy = RetryPolicy {
                retries: self.retries,
                ..RetryPolicy::default()
            };
            Ok(Retry::new(api, policy))
        };
        let fixtures = || self.fixture_path.clone().expect("validated");
        Ok(match self.mode {
            Mode::Live => Box::new(live()?),
            Mode::Record => Box::new(Recorder::to_file(live()?, &fixtures())?),
            Mode::Replay => Box::new(ReplayBackend::load(&fixtures())?),
            Mode::Mock => {
                let mut mock = MockBackend::new();
                if let Some(path) = &self.references_path {
                    let (refs, bad) = read_records::<Reference>(path)?;
                    if let Some(b) = bad.first() {
                        anyhow::bail!("{}: line {}: {}", path.display(), b.line, b.message);
                    }
                    mock = mock.with_references(refs.into_iter().map(|r| r.text));
                }
                Box::new(mock)
            }
        })
    }

    pub fn pipeline(&self) -> anyhow::Result<Pipeline<Box<dyn ChatBackend>>> {
        Ok(Pipeline::with_config(
            self.backend()?,
            crate::prompts::PromptSet::builtin(),
            self.pipeline_config(),
        ))
    }

    pub fn scorer(&self) -> Box<dyn Scorer> {
        if self.scorer == "proxy" {
            Box::new(ProxyScorer { k: self.proxy_k })
        } else {
            Box::new(ExternalScorer {
                name: self.scorer.clone(),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Records

/// One learner essay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, Deserialize)]
struct Reference {
    text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRecord {
    pub id: String,
    pub topic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub id: String,
    pub profile: ErrorProfile,
    pub corrected: String,
    pub edits: Vec<Edit>,
    pub audit: ProfileAudit,
}

/// One generated essay. The generation fields are null for the
/// comparison method, which has no target profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRecord {
    pub id: String,
    pub topic: String,
    pub method: Method,
    pub text: String,
    pub target_profile: Option<ErrorProfile>,
    pub achieved_profile: Option<ErrorProfile>,
    pub accepted: Option<bool>,
    pub attempts: Option<Vec<Attempt>>,
    pub audit: Option<GenerationAudit>,
}

/// A line that could not be used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadLine {
    pub line: usize,
    pub message: String,
}

/// Reads JSON lines, skipping blanks. Malformed lines are returned
/// separately; an unreadable file is an error.
pub fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> io::Result<(Vec<T>, Vec<BadLine>)> {
    let file = File::open(path)?;
    let (mut ok, mut bad) = (Vec::new(), Vec::new());
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => ok.push(r),
            Err(e) => bad.push(BadLine {
                line: idx + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok((ok, bad))
}

pub fn write_records<T: Serialize>(out: &mut dyn Write, records: &[T]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

// ---------------------------------------------------------------------------
// Commands

#[derive(Debug, Parser)]
#[command(name = "peermirror", version, about = "Learner error profiling and error-mirroring essay generation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract an error profile for every essay of a corpus.
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an essay per corpus entry with the proposed or comparison method.
    Generate {
        /// proposed or comparison.
        #[arg(long)]
        method: String,
        #[arg(long = "in")]
        input: PathBuf,
        /// JSONL of {"id","topic"}; overrides the corpus topics.
        #[arg(long)]
        topics: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare generated essays with the learners' essays.
    Evaluate {
        #[arg(long)]
        user: PathBuf,
        #[arg(long)]
        proposed: PathBuf,
        #[arg(long)]
        comparison: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// json, csv or markdown.
        #[arg(long, default_value = "json")]
        format: String,
        /// Also run raw-value and paired tests.
        #[arg(long)]
        secondary: bool,
    },
    /// Replay a scripted seven-step session.
    Session {
        #[arg(long)]
        topic: String,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
        }
    };
    let config = match Config::from_process(&cli.global) {
        Ok(c) => c,
        Err(e) => return fatal(e),
    };
    execute(&config, cli.command)
}

/// What a command runs against: the settings plus, optionally, a backend
/// that replaces the one the mode would build.
pub struct Runtime<'a> {
    pub config: &'a Config,
    pub backend: Option<Arc<dyn ChatBackend>>,
}

impl Runtime<'_> {
    pub fn pipeline(&self) -> anyhow::Result<Pipeline<Box<dyn ChatBackend>>> {
        match &self.backend {
            Some(b) => Ok(Pipeline::with_config(
                Box::new(Arc::clone(b)),
                crate::prompts::PromptSet::builtin(),
                self.config.pipeline_config(),
            )),
            None => self.config.pipeline(),
        }
    }
}

pub fn execute(config: &Config, command: Command) -> i32 {
    execute_with(config, command, None)
}

/// Like [`execute`], with `backend` standing in for the configured mode.
pub fn execute_with(config: &Config, command: Command, backend: Option<Arc<dyn ChatBackend>>) -> i32 {
    let rt = Runtime { config, backend };
    let pool = match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => return fatal(e),
    };
    pool.install(|| match command {
        Command::Profile { input, out } => cmd_profile(&rt, &input, out.as_deref()),
        Command::Generate {
            method,
            input,
            topics,
            out,
        } => match method.parse::<Method>() {
            Ok(m) => cmd_generate(&rt, m, &input, topics.as_deref(), out.as_deref()),
            Err(e) => usage(e),
        },
        Command::Evaluate {
            user,
            proposed,
            comparison,
            report,
            format,
            secondary,
        } => match format.parse::<ReportFormat>() {
            Ok(f) => cmd_evaluate(&rt, [&user, &proposed, &comparison], report.as_deref(), f, secondary),
            Err(e) => usage(e),
        },
        Command::Session {
            topic,
            script,
            transcript,
        } => cmd_session(&rt, &topic, &script, transcript.as_deref()),
    })
}

fn fatal(e: impl fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_FATAL
}

fn usage(e: impl fmt::Display) -> i32 {
    eprintln!("usage error: {e}");
    EXIT_FATAL
}

/// Loads a corpus, reporting malformed lines and duplicate ids. The
/// returned flag says whether anything was dropped.
fn load_corpus(path: &Path) -> io::Result<(Vec<CorpusRecord>, bool)> {
    let (records, bad) = read_records::<CorpusRecord>(path)?;
    for b in &bad {
        eprintln!("{}: line {}: {}", path.display(), b.line, b.message);
    }
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = !bad.is_empty();
    for r in records {
        if seen.insert(r.id.clone()) {
            kept.push(r);
        } else {
            eprintln!("{}: duplicate id `{}` ignored", path.display(), r.id);
            dropped = true;
        }
    }
    kept.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((kept, dropped))
}

/// Runs `work` on every record in parallel. Results come back in input
/// order; failures are printed and counted.
fn per_record<T, F>(records: &[CorpusRecord], work: F) -> (Vec<T>, usize)
where
    T: Send,
    F: Fn(&CorpusRecord) -> anyhow::Result<T> + Sync,
{
    let results: Vec<_> = records.par_iter().map(|r| (r, work(r))).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = 0;
    for (r, res) in results {
        match res {
            Ok(v) => ok.push(v),
            Err(e) => {
                eprintln!("{}: {e:#}", r.id);
                failed += 1;
            }
        }
    }
    (ok, failed)
}

fn finish<T: Serialize>(out: Option<&Path>, records: &[T], partial: bool) -> i32 {
    let written = open_out(out).and_then(|mut w| write_records(&mut *w, records));
    match written {
        Err(e) => fatal(format!("writing output: {e}")),
        Ok(()) if partial => EXIT_PARTIAL,
        Ok(()) => EXIT_OK,
    }
}

pub fn cmd_profile(rt: &Runtime, input: &Path, out: Option<&Path>) -> i32 {
    let (corpus, dropped) = match load_corpus(input) {
        Ok(c) => c,
        Err(e) => return fatal(format!("{}: {e}", input.display())),
    };
    let pipeline = match rt.pipeline() {
        Ok(p) => p,
        Err(e) => return fatal(e),
    };
    let (records, failed) = per_record(&corpus, |r| {
        let x = pipeline.extract_profile(&r.text)?;
        Ok(ProfileRecord {
            id: r.id.clone(),
            profile: x.profile,
            corrected: x.corrected,
            edits: x.edits,
            audit: x.audit,
        })
    });
    finish(out, &records, dropped || failed > 0)
}

pub fn cmd_generate(rt: &Runtime, method: Method, input: &Path, topics: Option<&Path>, out: Option<&Path>) -> i32 {
    let (corpus, mut partial) = match load_corpus(input) {
        Ok(c) => c,
        Err(e) => return fatal(format!("{}: {e}", input.display())),
    };
    let mut topic_of: HashMap<String, String> = HashMap::new();
    if let Some(path) = topics {
        match read_records::<TopicRecord>(path) {
            Ok((t, bad)) => {
                for b in &bad {
                    eprintln!("{}: line {}: {}", path.display(), b.line, b.message);
                }
                partial |= !bad.is_empty();
                topic_of.extend(t.into_iter().map(|t| (t.id, t.topic)));
            }
            Err(e) => return fatal(format!("{}: {e}", path.display())),
        }
    }
    let pipeline = match rt.pipeline() {
        Ok(p) => p,
        Err(e) => return fatal(e),
    };
    let (records, failed) = per_record(&corpus, |r| {
        let topic = topic_of
            .get(&r.id)
            .or(r.topic.as_ref())
            .ok_or_else(|| anyhow::anyhow!("no topic in the corpus or the topics file"))?
            .clone();
        Ok(match method {
            Method::Proposed => {
                let g = pipeline.generate_mirrored(&r.text, &topic)?;
                GenerateRecord {
                    id: r.id.clone(),
                    topic,
                    method,
                    text: g.text,
                    target_profile: Some(g.target_profile),
                    achieved_profile: Some(g.achieved_profile),
                    accepted: Some(g.accepted),
                    attempts: Some(g.attempts),
                    audit: Some(g.audit),
                }
            }
            Method::Comparison => GenerateRecord {
                id: r.id.clone(),
                text: pipeline.generate_comparison(&r.text, &topic)?,
                topic,
                method,
                target_profile: None,
                achieved_profile: None,
                accepted: None,
                attempts: None,
                audit: None,
            },
        })
    });
    finish(out, &records, partial || failed > 0)
}

fn load_samples(path: &Path) -> Result<Vec<Sample>, String> {
    let (samples, bad) = read_records::<Sample>(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(b) = bad.first() {
        return Err(format!("{}: line {}: {}", path.display(), b.line, b.message));
    }
    Ok(samples)
}

pub fn cmd_evaluate(
    rt: &Runtime,
    inputs: [&Path; 3],
    report: Option<&Path>,
    format: ReportFormat,
    secondary: bool,
) -> i32 {
    let mut sets = Vec::with_capacity(3);
    for path in inputs {
        match load_samples(path) {
            Ok(s) => sets.push(s),
            Err(e) => return fatal(e),
        }
    }
    let pipeline = match rt.pipeline() {
        Ok(p) => p,
        Err(e) => return fatal(e),
    };
    let scorer = rt.config.scorer();
    let measure = |text: &str| evaluate::measure_essay(&pipeline, text, scorer.as_ref());
    let result = evaluate::run_experiment(&sets[0], &sets[1], &sets[2], measure, ExperimentOptions { secondary });
    let report_data = match result {
        Ok(r) => r,
        Err(e) => return fatal(e),
    };
    for s in &report_data.skipped {
        eprintln!("{}: skipped: {}", s.id, s.reason);
    }
    let rendered = match evaluate::render_report(&report_data, format) {
        Ok(r) => r,
        Err(e) => return fatal(e),
    };
    let written = open_out(report).and_then(|mut w| {
        w.write_all(rendered.as_bytes())?;
        w.flush()
    });
    match written {
        Err(e) => fatal(format!("writing report: {e}")),
        Ok(()) if report_data.skipped.is_empty() => EXIT_OK,
        Ok(()) => EXIT_PARTIAL,
    }
}

pub fn cmd_session(rt: &Runtime, topic: &str, script: &Path, transcript: Option<&Path>) -> i32 {
    let events = match File::open(script).map_err(session::SessionError::from).and_then(|f| session::read_script(BufReader::new(f))) {
        Ok(e) => e,
        Err(e) => return fatal(format!("{}: {e}", script.display())),
    };
    // Only a sentinel needs a model; other scripts run without one.
    let needs_pipeline = events.iter().any(|e| e.content.trim() == PIPELINE_SENTINEL);
    let pipeline = if needs_pipeline {
        match rt.pipeline() {
            Ok(p) => Some(p),
            Err(e) => return fatal(e),
        }
    } else {
        None
    };
    let (session, error) = match session::run_script(topic, events, pipeline.as_ref()) {
        Ok(s) => (Some(s), None),
        Err((s, e)) => (s, Some(e.to_string())),
    };
    let error = error.or_else(|| {
        let s = session.as_ref()?;
        let step = s.current_step()?;
        Some(format!(
            "script ended before step {} ({})",
            step.ordinal(),
            step.speaker()
        ))
    });
    let entries = session.as_ref().map(|s| s.transcript()).unwrap_or(&[]);
    let written = open_out(transcript).and_then(|mut w| {
        session::write_transcript(&mut w, entries)?;
        w.flush()
    });
    if let Err(e) = written {
        return fatal(format!("writing transcript: {e}"));
    }
    match error {
        Some(e) => fatal(e),
        None => EXIT_OK,
    }
}
