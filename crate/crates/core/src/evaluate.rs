//! Measuring generated essays against the learner they imitate.
//!
//! Every essay gets an error count (the pipeline's extracted profile total)
//! and a quality score. Per source essay the generated essays are compared
//! with the learner's by absolute difference, and the two methods' vectors
//! of differences are compared with a pooled two-sample t-test and Cohen's d.
//!
//! Tests are oriented as (comparison, proposed): a positive statistic means
//! the proposed method lands closer to the learner.
//!
//! The CSV report is a long table with the header `metric,value` and these
//! rows, in order: `n`, `errors_user`, `errors_proposed`,
//! `errors_comparison`, `quality_user`, `quality_proposed`,
//! `quality_comparison`, `abs_error_diff_proposed`,
//! `abs_error_diff_comparison`, `abs_quality_diff_proposed`,
//! `abs_quality_diff_comparison`, then `t`, `df`, `p`, `d` for `errors_test`
//! and `quality_test`, then the same four for each secondary test when
//! present, then `skipped`. Missing values are empty.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::client::ChatBackend;
use crate::pipeline::{Pipeline, PipelineError};
use crate::text;

pub const DEFAULT_PROXY_K: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("need at least two values per sample (got {0} and {1})")]
    TooFewSamples(usize, usize),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("non-finite value in sample")]
    NonFinite,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("word count must be at least 1")]
    NoWords,
    #[error("proxy constant k must be positive, got {0}")]
    BadProxyK(f64),
    #[error("scorer `{0}` is not available")]
    ScorerUnavailable(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("inputs do not align by id; orphans: {}", .0.join(", "))]
    Alignment(Vec<String>),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("report has n = {0}; at least 2 records are needed")]
    TooFewRecords(usize),
    #[error("unknown report format `{0}` (expected json, csv or markdown)")]
    UnknownFormat(String),
}

// ---------------------------------------------------------------------------
// Statistics

fn check(a: &[f64], b: &[f64]) -> Result<(), StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooFewSamples(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n − 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn pooled_variance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0)
}

/// Lanczos approximation (g = 7, nine terms).
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + G + 0.5;
    let series = C[1..]
        .iter()
        .enumerate()
        .fold(C[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=500 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let step = d * c;
        h *= step;
        if (step - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_fraction(b, a, 1.0 - x) / b
    }
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    let p = inc_beta(df / 2.0, 0.5, df / (df + t * t));
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: u32,
    pub p: f64,
}

/// Pooled-variance two-sample t-test.
pub fn t_test_two_sample(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    check(a, b)?;
    let sp2 = pooled_variance(a, b);
    if sp2 == 0.0 {
        return Err(StatsError::Degenerate("both samples have zero variance"));
    }
    let se = (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    let t = (mean(a) - mean(b)) / se;
    let df = (a.len() + b.len() - 2) as u32;
    Ok(TTest {
        t,
        df,
        p: t_two_sided_p(t, f64::from(df)),
    })
}

/// Standardized mean difference with the pooled standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check(a, b)?;
    let sp = pooled_variance(a, b).sqrt();
    if sp == 0.0 {
        return Err(StatsError::Degenerate("pooled standard deviation is zero"));
    }
    Ok((mean(a) - mean(b)) / sp)
}

/// Paired t-test on `a[i] − b[i]`; `d` is the mean difference over its
/// standard deviation.
pub fn t_test_paired(a: &[f64], b: &[f64]) -> Result<(TTest, f64), StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::Degenerate("paired samples differ in length"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    check(&diffs, &diffs)?;
    let sd = variance(&diffs).sqrt();
    if sd == 0.0 {
        return Err(StatsError::Degenerate("paired differences have zero variance"));
    }
    let n = diffs.len() as f64;
    let t = mean(&diffs) / (sd / n.sqrt());
    let df = (diffs.len() - 1) as u32;
    let test = TTest {
        t,
        df,
        p: t_two_sided_p(t, f64::from(df)),
    };
    Ok((test, mean(&diffs) / sd))
}

// ---------------------------------------------------------------------------
// Scoring

/// 100 × max(0, 1 − k × errors / words).
pub fn quality_proxy(error_count: u32, word_count: usize, k: f64) -> Result<f64, EvalError> {
    if word_count == 0 {
        return Err(EvalError::NoWords);
    }
    if !(k > 0.0) {
        return Err(EvalError::BadProxyK(k));
    }
    let density = f64::from(error_count) / word_count as f64;
    Ok(100.0 * (1.0 - k * density).max(0.0))
}

/// Quality score for an essay whose error count is already known.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, text: &str, error_count: u32) -> Result<f64, EvalError>;
}

#[derive(Debug, Clone, Copy)]
pub struct ProxyScorer {
    pub k: f64,
}

impl Default for ProxyScorer {
    fn default() -> Self {
        ProxyScorer { k: DEFAULT_PROXY_K }
    }
}

impl Scorer for ProxyScorer {
    fn name(&self) -> &str {
        "proxy"
    }

    fn score(&self, text: &str, error_count: u32) -> Result<f64, EvalError> {
        quality_proxy(error_count, text::count_words(text), self.k)
    }
}

/// Placeholder for a third-party scorer. No client ships with the crate,
/// so every call fails and the record is skipped.
#[derive(Debug, Clone)]
pub struct ExternalScorer {
    pub name: String,
}

impl Scorer for ExternalScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, _text: &str, _error_count: u32) -> Result<f64, EvalError> {
        Err(EvalError::ScorerUnavailable(self.name.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub errors: u32,
    pub quality: f64,
}

pub fn measure_essay<B: ChatBackend>(
    pipeline: &Pipeline<B>,
    text: &str,
    scorer: &dyn Scorer,
) -> Result<Measurement, EvalError> {
    let errors = pipeline.extract_profile(text)?.profile.total();
    let quality = scorer.score(text, errors)?;
    Ok(Measurement { errors, quality })
}

// ---------------------------------------------------------------------------
// Records and report

/// An essay to measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub essay_id: String,
    pub user_errors: u32,
    pub proposed_errors: u32,
    pub comparison_errors: u32,
    pub user_quality: f64,
    pub proposed_quality: f64,
    pub comparison_quality: f64,
    pub abs_error_diff_proposed: f64,
    pub abs_error_diff_comparison: f64,
    pub abs_quality_diff_proposed: f64,
    pub abs_quality_diff_comparison: f64,
}

impl EvalRecord {
    pub fn new(essay_id: &str, user: Measurement, proposed: Measurement, comparison: Measurement) -> Self {
        let diff = |a: f64, b: f64| (a - b).abs();
        EvalRecord {
            essay_id: essay_id.to_string(),
            user_errors: user.errors,
            proposed_errors: proposed.errors,
            comparison_errors: comparison.errors,
            user_quality: user.quality,
            proposed_quality: proposed.quality,
            comparison_quality: comparison.quality,
            abs_error_diff_proposed: diff(f64::from(proposed.errors), f64::from(user.errors)),
            abs_error_diff_comparison: diff(f64::from(comparison.errors), f64::from(user.errors)),
            abs_quality_diff_proposed: diff(proposed.quality, user.quality),
            abs_quality_diff_comparison: diff(comparison.quality, user.quality),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionMeans {
    pub user: f64,
    pub proposed: f64,
    pub comparison: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsDiffMeans {
    pub proposed: f64,
    pub comparison: f64,
}

/// A test result; fields are absent when the test could not be computed,
/// in which case `note` says why.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub t: Option<f64>,
    pub df: Option<u32>,
    pub p: Option<f64>,
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestSummary {
    /// Pooled two-sample test plus Cohen's d.
    pub fn two_sample(a: &[f64], b: &[f64]) -> Self {
        match (t_test_two_sample(a, b), cohens_d(a, b)) {
            (Ok(t), Ok(d)) => TestSummary {
                t: Some(t.t),
                df: Some(t.df),
                p: Some(t.p),
                d: Some(d),
                note: None,
            },
            (Err(e), _) | (_, Err(e)) => Self::failed(e),
        }
    }

    pub fn paired(a: &[f64], b: &[f64]) -> Self {
        match t_test_paired(a, b) {
            Ok((t, d)) => TestSummary {
                t: Some(t.t),
                df: Some(t.df),
                p: Some(t.p),
                d: Some(d),
                note: None,
            },
            Err(e) => Self::failed(e),
        }
    }

    fn failed(e: StatsError) -> Self {
        TestSummary {
            note: Some(e.to_string()),
            ..Default::default()
        }
    }
}

/// Alternatives to the main tests: raw generated values instead of
/// differences from the learner, and a paired test on the differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryTests {
    pub raw_errors: TestSummary,
    pub raw_quality: TestSummary,
    pub paired_errors: TestSummary,
    pub paired_quality: TestSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub errors: ConditionMeans,
    pub quality: ConditionMeans,
    pub abs_error_diff: AbsDiffMeans,
    pub abs_quality_diff: AbsDiffMeans,
    pub errors_test: TestSummary,
    pub quality_test: TestSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<SecondaryTests>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<EvalRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExperimentOptions {
    /// Also run the tests in [`SecondaryTests`].
    pub secondary: bool,
}

/// Aggregates records into a report. Record order does not matter.
pub fn aggregate(mut records: Vec<EvalRecord>, mut skipped: Vec<Skipped>, options: ExperimentOptions) -> EvalReport {
    records.sort_by(|a, b| a.essay_id.cmp(&b.essay_id));
    skipped.sort_by(|a, b| a.id.cmp(&b.id));
    let col = |f: fn(&EvalRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let avg = |v: &[f64]| if v.is_empty() { 0.0 } else { mean(v) };
    let user_e = col(|r| f64::from(r.user_errors));
    let prop_e = col(|r| f64::from(r.proposed_errors));
    let comp_e = col(|r| f64::from(r.comparison_errors));
    let user_q = col(|r| r.user_quality);
    let prop_q = col(|r| r.proposed_quality);
    let comp_q = col(|r| r.comparison_quality);
    let dp_e = col(|r| r.abs_error_diff_proposed);
    let dc_e = col(|r| r.abs_error_diff_comparison);
    let dp_q = col(|r| r.abs_quality_diff_proposed);
    let dc_q = col(|r| r.abs_quality_diff_comparison);
    let secondary = options.secondary.then(|| SecondaryTests {
        raw_errors: TestSummary::two_sample(&comp_e, &prop_e),
        raw_quality: TestSummary::two_sample(&comp_q, &prop_q),
        paired_errors: TestSummary::paired(&dc_e, &dp_e),
        paired_quality: TestSummary::paired(&dc_q, &dp_q),
    });
    EvalReport {
        n: records.len(),
        errors: ConditionMeans {
            user: avg(&user_e),
            proposed: avg(&prop_e),
            comparison: avg(&comp_e),
        },
        quality: ConditionMeans {
            user: avg(&user_q),
            proposed: avg(&prop_q),
            comparison: avg(&comp_q),
        },
        abs_error_diff: AbsDiffMeans {
            proposed: avg(&dp_e),
            comparison: avg(&dc_e),
        },
        abs_quality_diff: AbsDiffMeans {
            proposed: avg(&dp_q),
            comparison: avg(&dc_q),
        },
        errors_test: TestSummary::two_sample(&dc_e, &dp_e),
        quality_test: TestSummary::two_sample(&dc_q, &dp_q),
        secondary,
        skipped,
        records,
    }
}

fn index(samples: &[Sample]) -> Result<BTreeMap<&str, &str>, EvalError> {
    let mut map = BTreeMap::new();
    for s in samples {
        if map.insert(s.id.as_str(), s.text.as_str()).is_some() {
            return Err(EvalError::DuplicateId(s.id.clone()));
        }
    }
    Ok(map)
}

/// Measures every (user, proposed, comparison) triple and aggregates.
///
/// `measure` returns the error count and quality of one text; a failure
/// skips that record and is listed in the report.
pub fn run_experiment<F>(
    user: &[Sample],
    proposed: &[Sample],
    comparison: &[Sample],
    measure: F,
    options: ExperimentOptions,
) -> Result<EvalReport, EvalError>
where
    F: Fn(&str) -> Result<Measurement, EvalError> + Sync,
{
    let (u, p, c) = (index(user)?, index(proposed)?, index(comparison)?);
    let all: BTreeSet<&str> = u.keys().chain(p.keys()).chain(c.keys()).copied().collect();
    let orphans: Vec<String> = all
        .iter()
        .filter(|id| !(u.contains_key(*id) && p.contains_key(*id) && c.contains_key(*id)))
        .map(|id| id.to_string())
        .collect();
    if !orphans.is_empty() {
        return Err(EvalError::Alignment(orphans));
    }
    let ids: Vec<&str> = all.into_iter().collect();
    let outcomes: Vec<Result<EvalRecord, Skipped>> = ids
        .par_iter()
        .map(|&id| {
            let m = |text: &str, which: &str| {
                measure(text).map_err(|e| Skipped {
                    id: id.to_string(),
                    reason: format!("{which}: {e}"),
                })
            };
            Ok(EvalRecord::new(id, m(u[id], "user")?, m(p[id], "proposed")?, m(c[id], "comparison")?))
        })
        .collect();
    let (mut records, mut skipped) = (Vec::new(), Vec::new());
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(s) => skipped.push(s),
        }
    }
    Ok(aggregate(records, skipped, options))
}

// ---------------------------------------------------------------------------
// Rendering

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(EvalError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "markdown",
        })
    }
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> Result<String, EvalError> {
    if report.n < 2 {
        return Err(EvalError::TooFewRecords(report.n));
    }
    Ok(match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => render_markdown(report),
    })
}

fn render_csv(r: &EvalReport) -> String {
    let mut rows: Vec<(String, String)> = vec![("n".into(), r.n.to_string())];
    let mut num = |name: &str, v: f64| rows.push((name.into(), v.to_string()));
    num("errors_user", r.errors.user);
    num("errors_proposed", r.errors.proposed);
    num("errors_comparison", r.errors.comparison);
    num("quality_user", r.quality.user);
    num("quality_proposed", r.quality.proposed);
    num("quality_comparison", r.quality.comparison);
    num("abs_error_diff_proposed", r.abs_error_diff.proposed);
    num("abs_error_diff_comparison", r.abs_error_diff.comparison);
    num("abs_quality_diff_proposed", r.abs_quality_diff.proposed);
    num("abs_quality_diff_comparison", r.abs_quality_diff.comparison);
    let mut tests = vec![("errors_test", &r.errors_test), ("quality_test", &r.quality_test)];
    if let Some(s) = &r.secondary {
        tests.extend([
            ("raw_errors", &s.raw_errors),
            ("raw_quality", &s.raw_quality),
            ("paired_errors", &s.paired_errors),
            ("paired_quality", &s.paired_quality),
        ]);
    }
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (name, t) in tests {
        rows.push((format!("{name}_t"), opt(t.t)));
        rows.push((format!("{name}_df"), t.df.map(|d| d.to_string()).unwrap_or_default()));
        rows.push((format!("{name}_p"), opt(t.p)));
        rows.push((format!("{name}_d"), opt(t.d)));
    }
    rows.push(("skipped".into(), r.skipped.len().to_string()));
    let mut out = String::from("metric,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

fn fixed(v: Option<f64>, places: usize) -> String {
    v.map(|x| format!("{x:.places$}")).unwrap_or_else(|| "n/a".into())
}

fn sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "n/a".into())
}

/// Whether `proposed` is under half of `comparison`, as a sentence.
fn half_statement(metric: &str, d: &AbsDiffMeans) -> String {
    let verdict = if 2.0 * d.proposed < d.comparison {
        "less than half"
    } else {
        "not less than half"
    };
    format!(
        "{metric}: the proposed method's mean absolute difference from the user ({:.2}) is {verdict} of the comparison method's ({:.2}).",
        d.proposed, d.comparison
    )
}

fn render_markdown(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Evaluation report\n\nEssays: {}\n", r.n);
    for (title, m) in [("Mean error count", &r.errors), ("Mean quality", &r.quality)] {
        let _ = writeln!(out, "## {title}\n\n| User | Proposed | Comparison |\n|---:|---:|---:|");
        let _ = writeln!(out, "| {:.2} | {:.2} | {:.2} |\n", m.user, m.proposed, m.comparison);
    }
    let _ = writeln!(
        out,
        "## Mean absolute difference from the user\n\n| Metric | Proposed | Comparison |\n|---|---:|---:|"
    );
    for (name, d) in [("Errors", &r.abs_error_diff), ("Quality", &r.abs_quality_diff)] {
        let _ = writeln!(out, "| {name} | {:.2} | {:.2} |", d.proposed, d.comparison);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{}", half_statement("Errors", &r.abs_error_diff));
    let _ = writeln!(out, "{}\n", half_statement("Quality", &r.abs_quality_diff));
    let _ = writeln!(
        out,
        "## Tests and effect sizes\n\n| Test | t | df | p | Cohen's d | Note |\n|---|---:|---:|---:|---:|---|"
    );
    let mut tests = vec![("Errors", &r.errors_test), ("Quality", &r.quality_test)];
    if let Some(s) = &r.secondary {
        tests.extend([
            ("Errors (raw values)", &s.raw_errors),
            ("Quality (raw values)", &s.raw_quality),
            ("Errors (paired)", &s.paired_errors),
            ("Quality (paired)", &s.paired_quality),
        ]);
    }
    for (name, t) in tests {
        let _ = writeln!(
            out,
            "| {name} | {} | {} | {} | {} | {} |",
            fixed(t.t, 3),
            t.df.map(|d| d.to_string()).unwrap_or_else(|| "n/a".into()),
            sci(t.p),
            fixed(t.d, 2),
            t.note.as_deref().unwrap_or("")
        );
    }
    if !r.skipped.is_empty() {
        let _ = writeln!(out, "\n## Skipped essays\n");
        for s in &r.skipped {
            let _ = writeln!(out, "- {}: {}", s.id, s.reason);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{corrupt, MockBackend, DRAFTS};
    use crate::{Category, ErrorProfile};
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    /// Sample variance from pairwise differences: Σ_{i<j} (x_i − x_j)² / (n(n − 1)).
    fn pairwise_variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mut s = 0.0;
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                s += (xs[i] - xs[j]).powi(2);
            }
        }
        s / (n * (n - 1.0))
    }

    fn oracle(a: &[f64], b: &[f64]) -> (f64, f64, f64, f64) {
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let ma = a.iter().sum::<f64>() / na;
        let mb = b.iter().sum::<f64>() / nb;
        let sp2 = ((na - 1.0) * pairwise_variance(a) + (nb - 1.0) * pairwise_variance(b)) / (na + nb - 2.0);
        let t = (ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
        let df = na + nb - 2.0;
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        let p = 2.0 * dist.cdf(-t.abs());
        (t, df, p, (ma - mb) / sp2.sqrt())
    }

    #[test]
    fn worked_examples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 3.0, 4.0, 5.0, 6.0];
        let t = t_test_two_sample(&a, &b).unwrap();
        assert!(close(t.t, -1.0, 1e-12));
        assert_eq!(t.df, 8);
        assert!(close(t.p, 0.346_593_507_087_334_16, 1e-9), "{}", t.p);
        assert!(close(cohens_d(&a, &b).unwrap(), -1.0 / 2.5f64.sqrt(), 1e-12));
        assert!(close(cohens_d(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), -2f64.sqrt(), 1e-12));
        let same = t_test_two_sample(&a, &a).unwrap();
        assert_eq!(same.t, 0.0);
        assert_eq!(same.p, 1.0);
        assert_eq!(cohens_d(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(t_test_two_sample(&[0.0, 0.0], &[0.0, 0.0]), Err(StatsError::Degenerate(_))));
        assert!(matches!(cohens_d(&[3.0, 3.0], &[1.0, 1.0]), Err(StatsError::Degenerate(_))));
        assert!(matches!(t_test_two_sample(&[1.0], &[1.0, 2.0]), Err(StatsError::TooFewSamples(1, 2))));
        assert!(matches!(t_test_two_sample(&[f64::NAN, 1.0], &[1.0, 2.0]), Err(StatsError::NonFinite)));
    }

    #[test]
    fn extreme_statistic_keeps_p_positive() {
        let t = t_test_two_sample(&[0.0, 1e-9, 0.0, 1e-9], &[1e6, 1e6 + 1e-9, 1e6, 1e6 + 1e-9]).unwrap();
        assert!(t.p > 0.0 && t.p <= 1.0);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-12);
        assert!(close(ln_gamma(5.0), 24f64.ln(), 1e-11));
        assert!(close(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), 1e-11));
        assert!(close(ln_gamma(10.5), 1_133_278.388_737_758_8f64.ln(), 1e-10));
    }

    proptest! {
        #[test]
        fn matches_reference(
            a in prop::collection::vec(-50.0f64..50.0, 2..12),
            b in prop::collection::vec(-50.0f64..50.0, 2..12),
        ) {
            let (t, df, p, d) = oracle(&a, &b);
            let got = t_test_two_sample(&a, &b).unwrap();
            prop_assert!(close(got.t, t, 1e-9), "{} vs {}", got.t, t);
            prop_assert_eq!(f64::from(got.df), df);
            prop_assert!(close(got.p, p, 1e-6), "{} vs {}", got.p, p);
            prop_assert!(close(cohens_d(&a, &b).unwrap(), d, 1e-9));
        }

        #[test]
        fn scale_and_shift_invariance(
            a in prop::collection::vec(-50.0f64..50.0, 2..10),
            b in prop::collection::vec(-50.0f64..50.0, 2..10),
            shift in -100.0f64..100.0,
            scale in 0.1f64..10.0,
        ) {
            let base = t_test_two_sample(&a, &b).unwrap();
            let d = cohens_d(&a, &b).unwrap();
            let shifted = |v: &[f64]| v.iter().map(|x| x + shift).collect::<Vec<_>>();
            let scaled = |v: &[f64]| v.iter().map(|x| x * scale).collect::<Vec<_>>();
            prop_assert!(close(t_test_two_sample(&shifted(&a), &shifted(&b)).unwrap().t, base.t, 1e-6));
            prop_assert!(close(cohens_d(&shifted(&a), &shifted(&b)).unwrap(), d, 1e-6));
            prop_assert!(close(t_test_two_sample(&scaled(&a), &scaled(&b)).unwrap().t, base.t, 1e-9));
            prop_assert!(close(cohens_d(&b, &a).unwrap(), -d, 1e-12));
            prop_assert_eq!(t_test_two_sample(&b, &a).unwrap().p, base.p);
        }
    }

    #[test]
    fn quality_proxy_formula() {
        assert_eq!(quality_proxy(0, 1, 5.0).unwrap(), 100.0);
        assert_eq!(quality_proxy(0, 350, 5.0).unwrap(), 100.0);
        assert_eq!(quality_proxy(5, 100, 5.0).unwrap(), 75.0);
        assert_eq!(quality_proxy(40, 100, 5.0).unwrap(), 0.0);
        assert!(matches!(quality_proxy(1, 0, 5.0), Err(EvalError::NoWords)));
        assert!(matches!(quality_proxy(1, 10, 0.0), Err(EvalError::BadProxyK(_))));
        assert!(quality_proxy(3, 100, 5.0).unwrap() >= quality_proxy(4, 100, 5.0).unwrap());
    }

    #[test]
    fn measure_with_mock() {
        let pipeline = Pipeline::new(MockBackend::new());
        let scorer = ProxyScorer::default();
        let clean = measure_essay(&pipeline, DRAFTS[1], &scorer).unwrap();
        assert_eq!(clean, Measurement { errors: 0, quality: 100.0 });
        let profile = ErrorProfile::from_counts([(Category::Spelling, 2), (Category::VerbTense, 3)]);
        let bad = corrupt(DRAFTS[1], &profile, 0);
        let m = measure_essay(&pipeline, &bad, &scorer).unwrap();
        assert_eq!(m.errors, 5);
        let words = text::count_words(&bad) as f64;
        assert!(close(m.quality, 100.0 * (1.0 - 25.0 / words), 1e-12));
        let external = ExternalScorer { name: "grammar-service".into() };
        assert!(matches!(
            measure_essay(&pipeline, &bad, &external),
            Err(EvalError::ScorerUnavailable(_))
        ));
    }

    fn sample(id: &str, text: &str) -> Sample {
        Sample {
            id: id.into(),
            text: text.into(),
        }
    }

    fn fake_measure(text: &str) -> Result<Measurement, EvalError> {
        let errors = text.matches('x').count() as u32;
        if text.contains('!') {
            return Err(EvalError::ScorerUnavailable("fake".into()));
        }
        Ok(Measurement {
            errors,
            quality: quality_proxy(errors, text::count_words(text).max(1), 5.0)?,
        })
    }

    #[test]
    fn identical_texts_give_degenerate_tests() {
        let texts = ["a b c", "x d e f", "x x g h i j"];
        let set: Vec<Sample> = texts.iter().enumerate().map(|(i, t)| sample(&format!("e{i}"), t)).collect();
        let r = run_experiment(&set, &set, &set, fake_measure, ExperimentOptions::default()).unwrap();
        assert_eq!(r.n, 3);
        assert_eq!(r.errors.user, r.errors.proposed);
        assert_eq!(r.abs_error_diff.proposed, 0.0);
        assert_eq!(r.abs_quality_diff.comparison, 0.0);
        assert!(r.errors_test.t.is_none());
        assert!(r.errors_test.note.as_deref().unwrap().contains("degenerate"));
    }

    #[test]
    fn orphans_and_skips() {
        let u = vec![sample("a", "x"), sample("b", "y"), sample("c", "z")];
        let p = vec![sample("a", "x"), sample("b", "y")];
        let c = vec![sample("a", "x"), sample("b", "y"), sample("d", "z")];
        match run_experiment(&u, &p, &c, fake_measure, ExperimentOptions::default()) {
            Err(EvalError::Alignment(o)) => assert_eq!(o, ["c", "d"]),
            other => panic!("{other:?}"),
        }
        let dup = vec![sample("a", "x"), sample("a", "y")];
        assert!(matches!(
            run_experiment(&dup, &dup, &dup, fake_measure, ExperimentOptions::default()),
            Err(EvalError::DuplicateId(_))
        ));
        let p = vec![sample("a", "x"), sample("b", "boom!"), sample("c", "x x")];
        let r = run_experiment(&u, &p, &u, fake_measure, ExperimentOptions::default()).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.skipped.len(), 1);
        assert!(r.skipped[0].reason.starts_with("proposed:"));
    }

    fn records() -> Vec<EvalRecord> {
        let m = |errors: u32, quality: f64| Measurement { errors, quality };
        vec![
            EvalRecord::new("e1", m(6, 60.0), m(5, 70.0), m(0, 92.0)),
            EvalRecord::new("e2", m(8, 55.0), m(7, 62.0), m(1, 88.0)),
            EvalRecord::new("e3", m(4, 71.0), m(4, 69.0), m(0, 95.0)),
            EvalRecord::new("e4", m(7, 58.0), m(9, 66.0), m(1, 90.0)),
        ]
    }

    #[test]
    fn aggregation_ignores_record_order() {
        let opts = ExperimentOptions { secondary: true };
        let a = aggregate(records(), vec![], opts);
        let mut rev = records();
        rev.reverse();
        assert_eq!(aggregate(rev, vec![], opts), a);
        assert!(close(a.abs_error_diff.proposed, 1.0, 1e-12));
        assert!(close(a.abs_error_diff.comparison, 5.75, 1e-12));
        assert!(a.errors_test.t.unwrap() > 0.0);
        assert!(a.secondary.is_some());
    }

    #[test]
    fn record_invariants() {
        for r in records() {
            assert_eq!(r.abs_error_diff_proposed, (f64::from(r.proposed_errors) - f64::from(r.user_errors)).abs());
            assert_eq!(r.abs_quality_diff_comparison, (r.comparison_quality - r.user_quality).abs());
        }
    }

    #[test]
    fn rendering_contract() {
        let report = aggregate(records(), vec![], ExperimentOptions { secondary: true });
        let json = render_report(&report, ReportFormat::Json).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(render_report(&back, ReportFormat::Json).unwrap(), json);
        let md = render_report(&report, ReportFormat::Markdown).unwrap();
        assert_eq!(md.matches("\n## ").count(), 4);
        assert!(md.contains("Errors: the proposed method's mean absolute difference from the user (1.00) is less than half"));
        let csv = render_report(&report, ReportFormat::Csv).unwrap();
        assert!(csv.starts_with("metric,value\nn,4\nerrors_user,6.25\n"));
        assert!(csv.contains("\nraw_errors_df,6\n"));
        assert!(csv.ends_with("skipped,0\n"));
        let empty = aggregate(vec![], vec![], ExperimentOptions::default());
        assert!(matches!(render_report(&empty, ReportFormat::Json), Err(EvalError::TooFewRecords(0))));
        assert!(matches!("xml".parse::<ReportFormat>(), Err(EvalError::UnknownFormat(_))));
        assert_eq!("Markdown".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
    }
}
