//! The seven-step peer-learning flow as a scripted state machine.
//!
//! A [`Session`] accepts one event per step, in order, from the speaker the
//! step belongs to. Step contents are opaque text, except that the LCAA's
//! answer may be the [`PIPELINE_SENTINEL`], in which case the answer is
//! generated from the learner's step-2 answer by
//! [`Pipeline::generate_mirrored`].

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::client::ChatBackend;
use crate::pipeline::{Pipeline, PipelineError};

/// Step-4 content that asks the session to generate the LCAA answer.
pub const PIPELINE_SENTINEL: &str = "@pipeline";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    #[serde(rename = "TAA")]
    Taa,
    #[serde(rename = "USER")]
    User,
    #[serde(rename = "LCAA")]
    Lcaa,
}

impl Speaker {
    pub const ALL: [Speaker; 3] = [Speaker::Taa, Speaker::User, Speaker::Lcaa];

    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::Taa => "TAA",
            Speaker::User => "USER",
            Speaker::Lcaa => "LCAA",
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SessionStep {
    TaaAssigns = 1,
    UserAnswers,
    TaaFeedback,
    LcaaAnswers,
    TaaInstructs,
    UserCorrectsLcaa,
    TaaConcludes,
}

impl SessionStep {
    pub const ALL: [SessionStep; 7] = [
        SessionStep::TaaAssigns,
        SessionStep::UserAnswers,
        SessionStep::TaaFeedback,
        SessionStep::LcaaAnswers,
        SessionStep::TaaInstructs,
        SessionStep::UserCorrectsLcaa,
        SessionStep::TaaConcludes,
    ];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn from_ordinal(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn speaker(self) -> Speaker {
        match self {
            SessionStep::TaaAssigns
            | SessionStep::TaaFeedback
            | SessionStep::TaaInstructs
            | SessionStep::TaaConcludes => Speaker::Taa,
            SessionStep::UserAnswers | SessionStep::UserCorrectsLcaa => Speaker::User,
            SessionStep::LcaaAnswers => Speaker::Lcaa,
        }
    }

    pub fn next(self) -> Option<Self> {
        Self::from_ordinal(self.ordinal() + 1)
    }
}

/// One scripted turn. Also the shape of a transcript line, minus metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub step: u8,
    pub role: Speaker,
    pub content: String,
}

impl Event {
    pub fn new(step: u8, role: Speaker, content: impl Into<String>) -> Self {
        Event {
            step,
            role,
            content: content.into(),
        }
    }
}

/// Outcome of a generated LCAA answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub achieved_total: u32,
    pub target_total: u32,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: u8,
    pub role: Speaker,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<GenerationMeta>,
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("topic must not be empty")]
    EmptyTopic,
    #[error("protocol violation: expected step {expected_step} ({expected_role}), received step {received_step} ({received_role})")]
    ProtocolViolation {
        expected_step: u8,
        expected_role: Speaker,
        received_step: u8,
        received_role: Speaker,
    },
    #[error("session already completed; received step {received_step} ({received_role})")]
    Completed { received_step: u8, received_role: Speaker },
    #[error("step 4 asks for a generated answer but no pipeline is configured")]
    NoPipeline,
    #[error("generating the LCAA answer: {0}")]
    Pipeline(#[from] PipelineError),
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct Session {
    topic: String,
    current: Option<SessionStep>,
    transcript: Vec<TranscriptEntry>,
}

impl Session {
    pub fn new(topic: &str) -> Result<Self, SessionError> {
        if topic.trim().is_empty() {
            return Err(SessionError::EmptyTopic);
        }
        Ok(Session {
            topic: topic.to_string(),
            current: Some(SessionStep::TaaAssigns),
            transcript: Vec::new(),
        })
    }

    pub fn topic(&self) -> &str {
        &self.topic
    }

    /// The step waiting for its event, or `None` once completed.
    pub fn current_step(&self) -> Option<SessionStep> {
        self.current
    }

    pub fn is_completed(&self) -> bool {
        self.current.is_none()
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    fn check(&self, event: &Event) -> Result<SessionStep, SessionError> {
        let Some(step) = self.current else {
            return Err(SessionError::Completed {
                received_step: event.step,
                received_role: event.role,
            });
        };
        if event.step != step.ordinal() || event.role != step.speaker() {
            return Err(SessionError::ProtocolViolation {
                expected_step: step.ordinal(),
                expected_role: step.speaker(),
                received_step: event.step,
                received_role: event.role,
            });
        }
        Ok(step)
    }

    fn push(&mut self, step: SessionStep, content: String, metadata: Option<GenerationMeta>) {
        self.transcript.push(TranscriptEntry {
            step: step.ordinal(),
            role: step.speaker(),
            content,
            metadata,
        });
        self.current = step.next();
    }

    /// Applies one event. Contents are stored verbatim, the sentinel
    /// included; use [`advance_with`](Self::advance_with) to expand it.
    pub fn advance(&mut self, event: Event) -> Result<(), SessionError> {
        let step = self.check(&event)?;
        self.push(step, event.content, None);
        Ok(())
    }

    /// Like [`advance`](Self::advance), but a step-4 [`PIPELINE_SENTINEL`]
    /// is replaced by an essay mirroring the learner's step-2 answer.
    pub fn advance_with<B: ChatBackend>(
        &mut self,
        event: Event,
        pipeline: Option<&Pipeline<B>>,
    ) -> Result<(), SessionError> {
        let step = self.check(&event)?;
        if step != SessionStep::LcaaAnswers || event.content.trim() != PIPELINE_SENTINEL {
            self.push(step, event.content, None);
            return Ok(());
        }
        let pipeline = pipeline.ok_or(SessionError::NoPipeline)?;
        let answer = self
            .transcript
            .iter()
            .find(|e| e.step == SessionStep::UserAnswers.ordinal())
            .map(|e| e.content.clone())
            .unwrap_or_default();
        let result = pipeline.generate_mirrored(&answer, &self.topic)?;
        let meta = GenerationMeta {
            achieved_total: result.achieved_profile.total(),
            target_total: result.target_profile.total(),
            accepted: result.accepted,
        };
        self.push(step, result.text, Some(meta));
        Ok(())
    }
}

/// Reads a script: one JSON event per non-blank line.
pub fn read_script<R: BufRead>(reader: R) -> Result<Vec<Event>, SessionError> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| SessionError::Script {
            line: idx + 1,
            message: e.to_string(),
        })?;
        events.push(event);
    }
    Ok(events)
}

pub fn write_transcript<W: Write>(mut out: W, transcript: &[TranscriptEntry]) -> std::io::Result<()> {
    for entry in transcript {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Runs a whole script. On failure the partial session comes back with
/// the error so the transcript so far can still be written.
pub fn run_script<B: ChatBackend>(
    topic: &str,
    events: Vec<Event>,
    pipeline: Option<&Pipeline<B>>,
) -> Result<Session, (Option<Session>, SessionError)> {
    let mut session = Session::new(topic).map_err(|e| (None, e))?;
    for event in events {
        if let Err(e) = session.advance_with(event, pipeline) {
            return Err((Some(session), e));
        }
    }
    Ok(session)
}

/// The canonical script with placeholder contents.
pub fn canonical_events() -> Vec<Event> {
    SessionStep::ALL
        .iter()
        .map(|s| Event::new(s.ordinal(), s.speaker(), format!("step {} content", s.ordinal())))
        .collect()
}
