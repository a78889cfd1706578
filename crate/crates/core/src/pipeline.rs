//! The four-step mirroring method, the one-shot baseline, and the
//! inject-then-verify loop.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::client::{ChatBackend, ClientError, CompletionRequest, Message};
use crate::edits::{self, ChangeItem, Edit};
use crate::prompts::{PromptError, PromptSet, Stage};
use crate::taxonomy::{self, ErrorProfile};
use crate::text;

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("model returned an empty response")]
    EmptyResponse,
    #[error("model output contains list scaffolding `{0}`")]
    Scaffolding(String),
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StageError,
    },
    #[error("all {} injection attempts failed; last: {}", .errors.len(), .errors.last().map(String::as_str).unwrap_or(""))]
    AllAttemptsFailed { errors: Vec<String> },
}

fn stage_err(stage: Stage) -> impl Fn(StageError) -> PipelineError {
    move |source| PipelineError::Stage { stage, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    Comparison,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Comparison => "comparison",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "comparison" => Ok(Method::Comparison),
            other => Err(format!("unknown method `{other}` (expected proposed or comparison)")),
        }
    }
}

/// Sentence and word ranges requested from generated essays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthRange {
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for LengthRange {
    fn default() -> Self {
        LengthRange {
            min_sentences: 6,
            max_sentences: 10,
            min_words: 70,
            max_words: 130,
        }
    }
}

impl LengthRange {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.min_sentences > self.max_sentences || self.min_words > self.max_words {
            return Err(PipelineError::Precondition(format!("invalid length range {self:?}")));
        }
        Ok(())
    }

    /// Human-readable notes for every range the text falls outside of.
    pub fn violations(&self, essay: &str) -> Vec<String> {
        let mut flags = Vec::new();
        let sentences = text::count_sentences(essay);
        if !(self.min_sentences..=self.max_sentences).contains(&sentences) {
            flags.push(format!(
                "{sentences} sentences, outside {}..={}",
                self.min_sentences, self.max_sentences
            ));
        }
        let words = text::count_words(essay);
        if !(self.min_words..=self.max_words).contains(&words) {
            flags.push(format!("{words} words, outside {}..={}", self.min_words, self.max_words));
        }
        flags
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub topic: String,
    pub target_profile: ErrorProfile,
    pub lengths: LengthRange,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub model: String,
    pub analysis_temperature: f64,
    pub generation_temperature: f64,
    pub max_output_tokens: u32,
    pub max_attempts: u32,
    pub tolerance: u32,
    pub lengths: LengthRange,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: "gpt-4o".into(),
            analysis_temperature: 0.0,
            generation_temperature: 0.7,
            max_output_tokens: 2048,
            max_attempts: 3,
            tolerance: 1,
            lengths: LengthRange::default(),
        }
    }
}

/// What the model itself claimed in the counting step, next to how its
/// change list lined up with the deterministic edits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileAudit {
    pub declared_profile: ErrorProfile,
    pub declared_total: Option<u32>,
    pub issues: Vec<String>,
    pub unmatched_edits: usize,
    pub unmatched_items: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub corrected: String,
    /// Deterministic edits, each carrying its category.
    pub edits: Vec<Edit>,
    pub changes: Vec<ChangeItem>,
    pub profile: ErrorProfile,
    pub audit: ProfileAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draft {
    pub text: String,
    /// Length-range violations; drafts are kept regardless.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub text: String,
    pub achieved_total: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationAudit {
    pub draft: String,
    pub draft_flags: Vec<String>,
    /// Achieved minus target count per category, non-zero entries only.
    pub category_delta: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_audit: Option<ProfileAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub target_profile: ErrorProfile,
    pub achieved_profile: ErrorProfile,
    pub attempts: Vec<Attempt>,
    pub accepted: bool,
    pub audit: GenerationAudit,
}

pub struct Pipeline<B> {
    backend: B,
    prompts: PromptSet,
    config: PipelineConfig,
}

fn clean_output(raw: String) -> Result<String, StageError> {
    let t = raw.trim();
    if t.is_empty() {
        return Err(StageError::EmptyResponse);
    }
    Ok(if t.len() == raw.len() { raw } else { t.to_string() })
}

fn require_text(what: &str, value: &str) -> Result<(), PipelineError> {
    if value.trim().is_empty() {
        return Err(PipelineError::Precondition(format!("{what} must not be empty")));
    }
    Ok(())
}

const SCAFFOLDING: [&str; 4] = ["Total corrections", "Errors to include", "List of changes", "Essay:"];

impl<B: ChatBackend> Pipeline<B> {
    pub fn new(backend: B) -> Self {
        Self::with_config(backend, PromptSet::builtin(), PipelineConfig::default())
    }

    pub fn with_config(backend: B, prompts: PromptSet, config: PipelineConfig) -> Self {
        Pipeline {
            backend,
            prompts,
            config,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    fn call(&self, stage: Stage, slots: &[(&str, &str)], temperature: f64) -> Result<String, StageError> {
        let prompt = self.prompts.get(stage).render(slots)?;
        let request = CompletionRequest::new(
            self.config.model.clone(),
            vec![Message::user(prompt)],
            temperature,
            self.config.max_output_tokens,
        )?;
        let raw = self.backend.complete(&request)?;
        tracing::debug!(stage = stage.name(), fingerprint = %request.fingerprint(), "completion");
        Ok(raw)
    }

    pub fn correct_essay(&self, essay: &str) -> Result<String, PipelineError> {
        require_text("essay", essay)?;
        let t = self.config.analysis_temperature;
        self.call(Stage::Correct, &[("essay", essay)], t)
            .and_then(clean_output)
            .map_err(stage_err(Stage::Correct))
    }

    pub fn list_changes(&self, original: &str, corrected: &str) -> Result<Vec<ChangeItem>, PipelineError> {
        require_text("original", original)?;
        require_text("corrected", corrected)?;
        let t = self.config.analysis_temperature;
        let raw = self
            .call(Stage::ListChanges, &[("original", original), ("corrected", corrected)], t)
            .map_err(stage_err(Stage::ListChanges))?;
        let parsed = edits::parse_change_list(&raw);
        for s in &parsed.skipped {
            tracing::debug!(line = s.line_no, reason = %s.reason, "skipped change-list line");
        }
        Ok(parsed.items)
    }

    /// The authoritative profile comes from the deterministic edits; the
    /// model's own count is kept in the audit.
    pub fn profile_errors(
        &self,
        original: &str,
        corrected: &str,
        items: &[ChangeItem],
    ) -> Result<(ErrorProfile, Vec<Edit>, ProfileAudit), PipelineError> {
        let edit_list = edits::extract_edits(original, corrected);
        self.profile_with_edits(original, corrected, items, edit_list)
    }

    fn profile_with_edits(
        &self,
        original: &str,
        corrected: &str,
        items: &[ChangeItem],
        edit_list: Vec<Edit>,
    ) -> Result<(ErrorProfile, Vec<Edit>, ProfileAudit), PipelineError> {
        let t = self.config.analysis_temperature;
        let changes = edits::render_change_list(items);
        let raw = self
            .call(
                Stage::CountErrors,
                &[("original", original), ("corrected", corrected), ("changes", &changes)],
                t,
            )
            .map_err(stage_err(Stage::CountErrors))?;
        let declared = taxonomy::parse_error_counts(&raw);
        let rec = edits::reconcile(&edit_list, items);
        let categorized = taxonomy::categorize(&edit_list, &rec.hints(items, edit_list.len()));
        let mut profile = ErrorProfile::new();
        for e in &categorized {
            profile.add_count(e.category.expect("categorized"), 1);
        }
        let audit = ProfileAudit {
            declared_profile: declared.profile,
            declared_total: declared.declared_total,
            issues: declared.issues,
            unmatched_edits: rec.unmatched_edits.len(),
            unmatched_items: rec.unmatched_items.len(),
        };
        Ok((profile, categorized, audit))
    }

    /// Correct, diff, list, count.
    pub fn extract_profile(&self, essay: &str) -> Result<Extraction, PipelineError> {
        let corrected = self.correct_essay(essay)?;
        let edit_list = edits::extract_edits(essay, &corrected);
        let changes = self.list_changes(essay, &corrected)?;
        let (profile, edits, audit) = self.profile_with_edits(essay, &corrected, &changes, edit_list)?;
        Ok(Extraction {
            corrected,
            edits,
            changes,
            profile,
            audit,
        })
    }

    pub fn draft_clean_essay(&self, topic: &str, lengths: &LengthRange) -> Result<Draft, PipelineError> {
        require_text("topic", topic)?;
        lengths.validate()?;
        let nums = [
            lengths.min_sentences.to_string(),
            lengths.max_sentences.to_string(),
            lengths.min_words.to_string(),
            lengths.max_words.to_string(),
        ];
        let slots = [
            ("topic", topic),
            ("min_sentences", nums[0].as_str()),
            ("max_sentences", nums[1].as_str()),
            ("min_words", nums[2].as_str()),
            ("max_words", nums[3].as_str()),
        ];
        let text = self
            .call(Stage::Draft, &slots, self.config.generation_temperature)
            .and_then(clean_output)
            .map_err(stage_err(Stage::Draft))?;
        let flags = lengths.violations(&text);
        for f in &flags {
            tracing::warn!(flag = %f, "draft outside requested length");
        }
        Ok(Draft { text, flags })
    }

    pub fn inject_errors(&self, clean_essay: &str, profile: &ErrorProfile) -> Result<String, PipelineError> {
        require_text("essay", clean_essay)?;
        let rendered = profile.render();
        let out = self
            .call(
                Stage::Inject,
                &[("profile", &rendered), ("essay", clean_essay)],
                self.config.generation_temperature,
            )
            .and_then(clean_output)
            .map_err(stage_err(Stage::Inject))?;
        if let Some(s) = SCAFFOLDING.iter().find(|s| out.contains(*s)) {
            return Err(PipelineError::Stage {
                stage: Stage::Inject,
                source: StageError::Scaffolding(s.to_string()),
            });
        }
        Ok(out)
    }

    pub fn verify_injection(&self, essay: &str, target: &ErrorProfile) -> Result<(ErrorProfile, bool), PipelineError> {
        let achieved = self.extract_profile(essay)?.profile;
        let accepted = achieved.total().abs_diff(target.total()) <= self.config.tolerance;
        Ok((achieved, accepted))
    }

    /// Profiles the learner essay, then mirrors that profile on a fresh
    /// draft for `topic`.
    pub fn generate_mirrored(&self, user_essay: &str, topic: &str) -> Result<GenerationResult, PipelineError> {
        require_text("user essay", user_essay)?;
        let extraction = self.extract_profile(user_essay)?;
        let spec = GenerationSpec {
            topic: topic.to_string(),
            target_profile: extraction.profile,
            lengths: self.config.lengths,
            method: Method::Proposed,
        };
        let mut result = self.mirror(&spec)?;
        result.audit.source_audit = Some(extraction.audit);
        Ok(result)
    }

    /// Draft, then inject and verify up to `max_attempts` times, keeping
    /// the attempt closest to the target total (earliest on ties).
    pub fn mirror(&self, spec: &GenerationSpec) -> Result<GenerationResult, PipelineError> {
        spec.lengths.validate()?;
        let target = &spec.target_profile;
        let draft = self.draft_clean_essay(&spec.topic, &spec.lengths)?;
        let mut attempts = Vec::new();
        let mut errors = Vec::new();
        let mut best: Option<(u32, usize, ErrorProfile, bool)> = None;
        for _ in 0..self.config.max_attempts.max(1) {
            let outcome = self
                .inject_errors(&draft.text, target)
                .and_then(|t| self.verify_injection(&t, target).map(|v| (t, v)));
            match outcome {
                Ok((text, (achieved, accepted))) => {
                    let gap = achieved.total().abs_diff(target.total());
                    attempts.push(Attempt {
                        text,
                        achieved_total: Some(achieved.total()),
                        error: None,
                    });
                    if best.as_ref().is_none_or(|b| gap < b.0) {
                        best = Some((gap, attempts.len() - 1, achieved, accepted));
                    }
                    if accepted {
                        break;
                    }
                }
                Err(e) => {
                    tracing::warn!(error = %e, "injection attempt failed");
                    errors.push(e.to_string());
                    attempts.push(Attempt {
                        text: String::new(),
                        achieved_total: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
        let Some((_, idx, achieved, accepted)) = best else {
            return Err(PipelineError::AllAttemptsFailed { errors });
        };
        let category_delta = achieved
            .delta(target)
            .into_iter()
            .filter(|(_, d)| *d != 0)
            .map(|(c, d)| (c.as_str().to_string(), d))
            .collect();
        Ok(GenerationResult {
            text: attempts[idx].text.clone(),
            target_profile: target.clone(),
            achieved_profile: achieved,
            attempts,
            accepted,
            audit: GenerationAudit {
                draft: draft.text,
                draft_flags: draft.flags,
                category_delta,
                source_audit: None,
            },
        })
    }

    /// The one-shot baseline: no profiling and no verification.
    pub fn generate_comparison(&self, user_essay: &str, topic: &str) -> Result<String, PipelineError> {
        require_text("user essay", user_essay)?;
        require_text("topic", topic)?;
        self.call(
            Stage::Comparison,
            &[("topic", topic), ("essay", user_essay)],
            self.config.generation_temperature,
        )
        .and_then(clean_output)
        .map_err(stage_err(Stage::Comparison))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{corrupt, MockBackend, DRAFTS, TOPICS};
    use crate::taxonomy::Category;
    use std::sync::Mutex;

    /// Answers with queued responses, whatever the request.
    struct Scripted(Mutex<Vec<Result<String, ClientError>>>);

    impl Scripted {
        fn new(responses: Vec<Result<&str, ClientError>>) -> Self {
            let mut v: Vec<_> = responses.into_iter().map(|r| r.map(String::from)).collect();
            v.reverse();
            Scripted(Mutex::new(v))
        }
    }

    impl ChatBackend for Scripted {
        fn complete(&self, _: &CompletionRequest) -> Result<String, ClientError> {
            self.0.lock().unwrap().pop().expect("script exhausted")
        }
    }

    #[test]
    fn clean_essay_has_empty_profile() {
        let p = Pipeline::new(MockBackend::new());
        let x = p.extract_profile(DRAFTS[0]).unwrap();
        assert_eq!(x.corrected, DRAFTS[0]);
        assert!(x.changes.is_empty());
        assert_eq!(x.profile.total(), 0);
        assert!(p.list_changes(DRAFTS[0], DRAFTS[0]).unwrap().is_empty());
    }

    #[test]
    fn seeded_errors_are_recovered() {
        let p = Pipeline::new(MockBackend::new());
        let target = ErrorProfile::from_counts([(Category::ArticleUsage, 2), (Category::Spelling, 1)]);
        let essay = corrupt(DRAFTS[2], &target, 0);
        let x = p.extract_profile(&essay).unwrap();
        assert_eq!(x.profile, target);
        assert_eq!(x.audit.declared_total, Some(3));
        assert_eq!(x.edits.len(), 3);
    }

    #[test]
    fn deterministic_count_overrides_declared_total() {
        let backend = Scripted::new(vec![Ok("- Article error: 5\nTotal corrections: 5")]);
        let p = Pipeline::new(backend);
        let (profile, _, audit) = p
            .profile_errors("He go to school.", "He goes to the school.", &[])
            .unwrap();
        assert_eq!(profile.total(), 2);
        assert_eq!(audit.declared_total, Some(5));
        let backend = Scripted::new(vec![Ok("Total corrections: 4")]);
        let (profile, _, _) = Pipeline::new(backend).profile_errors("Same.", "Same.", &[]).unwrap();
        assert_eq!(profile.total(), 0);
    }

    #[test]
    fn empty_response_is_a_stage_error() {
        let p = Pipeline::new(Scripted::new(vec![Ok("  \n")]));
        let err = p.correct_essay("Some text.").unwrap_err();
        assert!(matches!(
            err,
            PipelineError::Stage { stage: Stage::Correct, source: StageError::EmptyResponse }
        ));
    }

    #[test]
    fn injection_scaffolding_is_rejected() {
        let p = Pipeline::new(Scripted::new(vec![Ok("Essay text.\n\nTotal corrections: 2")]));
        let err = p.inject_errors("Essay text.", &ErrorProfile::new()).unwrap_err();
        assert!(matches!(err, PipelineError::Stage { source: StageError::Scaffolding(_), .. }));
    }

    #[test]
    fn zero_profile_injection_keeps_text() {
        let p = Pipeline::new(MockBackend::new());
        assert_eq!(p.inject_errors(DRAFTS[1], &ErrorProfile::new()).unwrap(), DRAFTS[1]);
        let (achieved, accepted) = p.verify_injection(DRAFTS[1], &ErrorProfile::new()).unwrap();
        assert_eq!(achieved.total(), 0);
        assert!(accepted);
    }

    #[test]
    fn mirrored_generation_accepts_on_first_attempt() {
        let target = ErrorProfile::from_counts([
            (Category::SubjectVerbAgreement, 2),
            (Category::Preposition, 2),
            (Category::NounNumber, 1),
            (Category::VerbTense, 1),
        ]);
        let user = corrupt(DRAFTS[3], &target, 0);
        let p = Pipeline::new(MockBackend::new());
        let r = p.generate_mirrored(&user, TOPICS[0]).unwrap();
        assert!(r.accepted);
        assert_eq!(r.attempts.len(), 1);
        assert_eq!(r.achieved_profile, target);
        assert_eq!(r.target_profile, target);
        assert!(r.audit.category_delta.is_empty());
        assert!(r.audit.draft_flags.is_empty());
    }

    #[test]
    fn shortfall_exhausts_attempts_and_keeps_best() {
        let target = ErrorProfile::from_counts([(Category::Spelling, 6)]);
        let p = Pipeline::new(MockBackend::new().with_injection_shortfall(2));
        let spec = GenerationSpec {
            topic: TOPICS[1].into(),
            target_profile: target,
            lengths: LengthRange::default(),
            method: Method::Proposed,
        };
        let r = p.mirror(&spec).unwrap();
        assert!(!r.accepted);
        assert_eq!(r.attempts.len(), 3);
        assert!(r.attempts.iter().all(|a| a.achieved_total == Some(4)));
        assert_eq!(r.text, r.attempts[0].text);
        assert_eq!(r.audit.category_delta["spelling"], -2);
    }

    #[test]
    fn errored_attempts_are_recorded_and_skipped() {
        let draft = DRAFTS[0];
        let backend = Scripted::new(vec![
            Ok(draft),
            Err(ClientError::Transport("reset".into())),
            Ok(draft),
            Ok(draft),
            Ok("No changes were needed."),
            Ok("Total corrections: 0"),
        ]);
        let p = Pipeline::new(backend);
        let spec = GenerationSpec {
            topic: "t".into(),
            target_profile: ErrorProfile::new(),
            lengths: LengthRange::default(),
            method: Method::Proposed,
        };
        let r = p.mirror(&spec).unwrap();
        assert_eq!(r.attempts.len(), 2);
        assert!(r.attempts[0].error.is_some());
        assert!(r.accepted);
        assert_eq!(r.text, draft);
    }

    #[test]
    fn all_attempts_failing_is_fatal() {
        let mut script = vec![Ok(DRAFTS[0])];
        script.extend((0..3).map(|_| Err(ClientError::Transport("down".into()))));
        let p = Pipeline::new(Scripted::new(script));
        let spec = GenerationSpec {
            topic: "t".into(),
            target_profile: ErrorProfile::new(),
            lengths: LengthRange::default(),
            method: Method::Proposed,
        };
        assert!(matches!(p.mirror(&spec), Err(PipelineError::AllAttemptsFailed { errors }) if errors.len() == 3));
    }

    #[test]
    fn draft_length_violations_are_flagged() {
        let p = Pipeline::new(Scripted::new(vec![Ok("Too short. Really.")]));
        let d = p.draft_clean_essay("topic", &LengthRange::default()).unwrap();
        assert_eq!(d.text, "Too short. Really.");
        assert_eq!(d.flags.len(), 2);
    }

    #[test]
    fn comparison_baseline_is_clean_and_requires_input() {
        let p = Pipeline::new(MockBackend::new());
        let text = p.generate_comparison("I like cat.", TOPICS[2]).unwrap();
        assert_eq!(p.extract_profile(&text).unwrap().profile.total(), 0);
        assert!(matches!(p.generate_comparison("", TOPICS[2]), Err(PipelineError::Precondition(_))));
    }
}
