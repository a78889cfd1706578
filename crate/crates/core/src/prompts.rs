//! Prompt assets with `{name}` placeholders.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("template `{template}` has no value for slot `{slot}`")]
    MissingSlot { template: String, slot: String },
    #[error("template `{template}`: two adjacent slots cannot be separated")]
    AdjacentSlots { template: String },
    #[error("reading prompt {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Correct,
    ListChanges,
    CountErrors,
    Draft,
    Inject,
    Comparison,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Correct,
        Stage::ListChanges,
        Stage::CountErrors,
        Stage::Draft,
        Stage::Inject,
        Stage::Comparison,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Correct => "correct",
            Stage::ListChanges => "list_changes",
            Stage::CountErrors => "count_errors",
            Stage::Draft => "draft",
            Stage::Inject => "inject",
            Stage::Comparison => "comparison",
        }
    }

    fn builtin(self) -> &'static str {
        match self {
            Stage::Correct => include_str!("../prompts/correct.txt"),
            Stage::ListChanges => include_str!("../prompts/list_changes.txt"),
            Stage::CountErrors => include_str!("../prompts/count_errors.txt"),
            Stage::Draft => include_str!("../prompts/draft.txt"),
            Stage::Inject => include_str!("../prompts/inject.txt"),
            Stage::Comparison => include_str!("../prompts/comparison.txt"),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    segments: Vec<Segment>,
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c == '_')
}

impl PromptTemplate {
    pub fn parse(name: &str, text: &str) -> Result<Self, PromptError> {
        let text = text.trim_end();
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut rest = text;
        while let Some(open) = rest.find('{') {
            let after = &rest[open + 1..];
            match after.find('}') {
                Some(close) if is_slot_name(&after[..close]) => {
                    literal.push_str(&rest[..open]);
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    } else if matches!(segments.last(), Some(Segment::Slot(_))) {
                        return Err(PromptError::AdjacentSlots { template: name.into() });
                    }
                    segments.push(Segment::Slot(after[..close].to_string()));
                    rest = &after[close + 1..];
                }
                _ => {
                    literal.push_str(&rest[..=open]);
                    rest = after;
                }
            }
        }
        literal.push_str(rest);
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Ok(PromptTemplate {
            name: name.to_string(),
            segments,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn slots(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Slot(n) => Some(n.as_str()),
            Segment::Literal(_) => None,
        })
    }

    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, PromptError> {
        let literal_len: usize = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Literal(l) => l.len(),
                Segment::Slot(_) => 0,
            })
            .sum();
        let value_len: usize = values.iter().map(|(_, v)| v.len()).sum();
        let mut out = String::with_capacity(literal_len + value_len);
        for seg in &self.segments {
            match seg {
                Segment::Literal(l) => out.push_str(l),
                Segment::Slot(s) => {
                    let v = values
                        .iter()
                        .find(|(k, _)| k == s)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| PromptError::MissingSlot {
                            template: self.name.clone(),
                            slot: s.clone(),
                        })?;
                    out.push_str(v);
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`render`](Self::render): recovers slot values when `text`
    /// was produced by this template.
    pub fn extract(&self, text: &str) -> Option<HashMap<String, String>> {
        let mut values = HashMap::new();
        let mut rest = text;
        let mut pending: Option<&str> = None;
        for seg in &self.segments {
            match seg {
                Segment::Literal(l) => match pending.take() {
                    None => rest = rest.strip_prefix(l.as_str())?,
                    Some(slot) => {
                        let at = rest.find(l.as_str())?;
                        values.insert(slot.to_string(), rest[..at].to_string());
                        rest = &rest[at + l.len()..];
                    }
                },
                Segment::Slot(s) => pending = Some(s),
            }
        }
        match pending {
            Some(slot) => {
                values.insert(slot.to_string(), rest.to_string());
            }
            None if !rest.is_empty() => return None,
            None => {}
        }
        Some(values)
    }
}

/// One template per pipeline stage.
#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: HashMap<Stage, PromptTemplate>,
}

impl PromptSet {
    pub fn builtin() -> Self {
        let templates = Stage::ALL
            .into_iter()
            .map(|s| {
                let t = PromptTemplate::parse(s.name(), s.builtin()).expect("builtin prompt parses");
                (s, t)
            })
            .collect();
        PromptSet { templates }
    }

    /// Built-in prompts, overridden by any `<stage>.txt` present in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::builtin();
        for stage in Stage::ALL {
            let path = dir.join(format!("{}.txt", stage.name()));
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                set.templates.insert(stage, PromptTemplate::parse(stage.name(), &text)?);
            }
        }
        Ok(set)
    }

    pub fn get(&self, stage: Stage) -> &PromptTemplate {
        &self.templates[&stage]
    }

    /// The stage whose template produced `text`, with its slot values.
    pub fn identify(&self, text: &str) -> Option<(Stage, HashMap<String, String>)> {
        Stage::ALL
            .into_iter()
            .find_map(|s| self.get(s).extract(text).map(|v| (s, v)))
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}
