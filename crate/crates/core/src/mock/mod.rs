//! Deterministic offline stand-in for the chat model.
//!
//! [`MockBackend`] recognizes which pipeline prompt it was sent and answers
//! each stage with rules instead of a language model:
//!
//! * correction snaps the essay to the closest clean reference text it
//!   knows (canned drafts, canned comparison essays, and any references
//!   registered with [`MockBackend::with_references`]), or returns the essay
//!   unchanged when nothing is close;
//! * the change list is the token diff, one labelled line per edit;
//! * counting tallies the labels of the change list;
//! * drafting and the one-shot comparison return canned essays per topic;
//! * injection plants exactly the requested errors, each at its own site.

mod essays;

pub use essays::{COMPARISONS, DRAFTS, TOPICS};

use crate::client::{ChatBackend, ClientError, CompletionRequest, Role};
use crate::edits::{parse_change_list, Edit, EditKind};
use crate::lexicon;
use crate::prompts::{PromptSet, Stage};
use crate::taxonomy::{classify_edit, normalize_label, parse_error_counts, Category, ErrorProfile};
use std::collections::HashMap;
use std::ops::Range;
use std::sync::{Arc, Mutex};

use crate::edits::build_edits;
use crate::text::{self, RawToken, Token, TokenKind};

/// Label the mock gives to a deleted duplicate word.
pub const REPEATED_WORD_LABEL: &str = "Repeated word";

struct Reference {
    text: String,
    bag: Vec<u64>,
}

impl Reference {
    fn new(text: String) -> Self {
        Reference {
            bag: bag_of(&text),
            text,
        }
    }
}

/// FNV-1a over the lowercased token.
fn token_key(surface: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut mix = |c: char| {
        h ^= u64::from(c);
        h = h.wrapping_mul(0x0100_0000_01b3);
    };
    for c in surface.chars() {
        if c.is_ascii() {
            mix(c.to_ascii_lowercase());
        } else {
            c.to_lowercase().for_each(&mut mix);
        }
    }
    h
}

/// Sorted token keys: a multiset of lowercased tokens.
fn bag_of(essay: &str) -> Vec<u64> {
    let normalized = text::normalize(essay);
    let mut bag = Vec::with_capacity(normalized.len() / 4 + 1);
    bag.extend(text::RawTokens::new(&normalized).map(|t| token_key(t.surface)));
    bag.sort_unstable();
    bag
}

/// Size of the symmetric difference of two multisets.
fn bag_distance(a: &[u64], b: &[u64]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() + b.len() - 2 * common
}

/// Analyzed essays kept before the cache is flushed.
const SITE_CACHE_LIMIT: usize = 64;

pub struct MockBackend {
    prompts: PromptSet,
    references: Vec<Reference>,
    shortfall: u32,
    sites: Mutex<HashMap<String, Arc<Sites>>>,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl MockBackend {
    pub fn new() -> Self {
        let references = DRAFTS
            .iter()
            .chain(COMPARISONS.iter())
            .map(|t| Reference::new(t.to_string()))
            .collect();
        MockBackend {
            prompts: PromptSet::builtin(),
            references,
            shortfall: 0,
            sites: Mutex::new(HashMap::new()),
        }
    }

    /// Use these templates to recognize requests.
    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = prompts;
        self
    }

    /// Registers clean texts the correction stage may snap to.
    pub fn with_references<I, S>(mut self, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.references
            .extend(texts.into_iter().map(|t| Reference::new(t.into())));
        self
    }

    /// Makes injection plant `k` fewer errors than requested.
    pub fn with_injection_shortfall(mut self, k: u32) -> Self {
        self.shortfall = k;
        self
    }

    pub fn correct(&self, essay: &str) -> String {
        let bag = bag_of(essay);
        let best = self
            .references
            .iter()
            .map(|r| (bag_distance(&bag, &r.bag), r))
            .min_by_key(|(d, _)| *d);
        match best {
            Some((d, r)) if d * 5 <= 2 * r.bag.len().max(bag.len()) => r.text.clone(),
            _ => essay.to_string(),
        }
    }

    pub fn list_changes(&self, original: &str, corrected: &str) -> String {
        let (original, corrected) = (text::normalize(original), text::normalize(corrected));
        let original_tokens = text::raw_tokens(&original);
        let edits = build_edits(&original_tokens, &text::raw_tokens(&corrected));
        if edits.is_empty() {
            return "No changes were needed.".to_string();
        }
        let mut out = String::new();
        for e in edits.iter() {
            for part in ["- '", &e.original_text, "' → '", &e.corrected_text, "' (", label_for(e, &original_tokens), ")\n"] {
                out.push_str(part);
            }
        }
        out.pop();
        out
    }

    pub fn count_errors(&self, changes: &str) -> String {
        let mut profile = ErrorProfile::new();
        for item in parse_change_list(changes).items {
            let category = match &item.label {
                Some(l) => normalize_label(l),
                None => classify_edit(&Edit {
                    kind: EditKind::Substitute,
                    original_range: 0..0,
                    corrected_range: 0..0,
                    original_text: item.original_fragment.clone(),
                    corrected_text: item.corrected_fragment.clone(),
                    category: None,
                }),
            };
            profile.add_count(category, 1);
        }
        profile.render()
    }

    pub fn draft(&self, topic: &str) -> String {
        DRAFTS[essays::topic_index(topic)].to_string()
    }

    pub fn comparison(&self, topic: &str) -> String {
        COMPARISONS[essays::topic_index(topic)].to_string()
    }

    pub fn inject(&self, profile_text: &str, essay: &str) -> String {
        let target = parse_error_counts(profile_text).profile;
        self.sites_for(essay).corrupt(&target, self.shortfall)
    }

    /// Like [`corrupt`], but reuses this backend's site analysis of `essay`.
    pub fn plant(&self, essay: &str, target: &ErrorProfile, shortfall: u32) -> String {
        self.sites_for(essay).corrupt(target, shortfall)
    }

    /// The candidate sites of `essay`, analyzed once per distinct essay.
    fn sites_for(&self, essay: &str) -> Arc<Sites> {
        let mut cache = self.sites.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(s) = cache.get(essay) {
            return Arc::clone(s);
        }
        if cache.len() >= SITE_CACHE_LIMIT {
            cache.clear();
        }
        let sites = Arc::new(Sites::analyze(essay));
        cache.insert(essay.to_string(), Arc::clone(&sites));
        sites
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let prompt = request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .ok_or_else(|| ClientError::InvalidRequest("no user message".into()))?;
        let (stage, slots) = self.prompts.identify(prompt).ok_or_else(|| {
            ClientError::InvalidRequest("mock backend does not recognize this prompt".into())
        })?;
        let slot = |name: &str| slots.get(name).map(String::as_str).unwrap_or("");
        Ok(match stage {
            Stage::Correct => self.correct(slot("essay")),
            Stage::ListChanges => self.list_changes(slot("original"), slot("corrected")),
            Stage::CountErrors => self.count_errors(slot("changes")),
            Stage::Draft => self.draft(slot("topic")),
            Stage::Inject => self.inject(slot("profile"), slot("essay")),
            Stage::Comparison => self.comparison(slot("topic")),
        })
    }
}

/// The label the mock attaches to an edit of `original_tokens`.
fn label_for(edit: &Edit, original_tokens: &[RawToken]) -> &'static str {
    if edit.kind == EditKind::Delete && edit.original_range.len() == 1 {
        let i = edit.original_range.start;
        let w = original_tokens[i].surface.to_lowercase();
        let same = |j: Option<usize>| {
            j.and_then(|j| original_tokens.get(j))
                .is_some_and(|t| t.surface.to_lowercase() == w)
        };
        if original_tokens[i].kind == TokenKind::Word && (same(i.checked_sub(1)) || same(Some(i + 1))) {
            return REPEATED_WORD_LABEL;
        }
    }
    classify_edit(edit).display_name()
}

#[derive(Debug, Clone)]
enum Op {
    Replace(usize, String),
    Delete(usize),
    InsertBefore(usize, String),
    CommaAfter(usize),
    Swap(usize),
    Duplicate(usize),
}

impl Op {
    /// Claimed positions in doubled coordinates: token `i` is `2i + 1`, the
    /// gap before token `i` is `2i`.
    fn claim(&self) -> (usize, usize) {
        match *self {
            Op::Replace(i, _) | Op::Delete(i) => (2 * i + 1, 2 * i + 1),
            Op::InsertBefore(i, _) => (2 * i, 2 * i),
            Op::CommaAfter(i) => (2 * i + 2, 2 * i + 2),
            Op::Swap(i) => (2 * i + 1, 2 * i + 3),
            Op::Duplicate(i) => (2 * i + 1, 2 * i + 2),
        }
    }

    fn anchor(&self) -> usize {
        match *self {
            Op::Replace(i, _)
            | Op::Delete(i)
            | Op::InsertBefore(i, _)
            | Op::CommaAfter(i)
            | Op::Swap(i)
            | Op::Duplicate(i) => i,
        }
    }
}

/// True when two untouched tokens separate the two claims. One is not
/// enough: a deletion and an insertion around a single token cost the same
/// as two substitutions, and the aligner may merge them.
fn separated(a: (usize, usize), b: (usize, usize)) -> bool {
    let (lo, hi) = if a.1 < b.0 { (a.1, b.0) } else if b.1 < a.0 { (b.1, a.0) } else { return false };
    let next_odd = if lo % 2 == 0 { lo + 1 } else { lo + 2 };
    next_odd + 2 < hi
}

struct Corruptor<'a> {
    tokens: &'a [Token],
    lower: Vec<String>,
}

const PLAN_ORDER: [Category; 11] = [
    Category::SubjectVerbAgreement,
    Category::VerbTense,
    Category::NounNumber,
    Category::WordForm,
    Category::Preposition,
    Category::ArticleUsage,
    Category::Other,
    Category::WordOrder,
    Category::Spelling,
    Category::WordChoice,
    Category::Punctuation,
];

const FALLBACK: [Category; 5] = [
    Category::Punctuation,
    Category::Spelling,
    Category::WordChoice,
    Category::WordOrder,
    Category::ArticleUsage,
];

fn capitalize_like(template: &str, word: &str) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) {
        let mut c = word.chars();
        match c.next() {
            Some(f) => f.to_uppercase().chain(c).collect(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

impl<'a> Corruptor<'a> {
    fn new(tokens: &'a [Token]) -> Self {
        Corruptor {
            tokens,
            lower: tokens.iter().map(|t| t.surface.to_lowercase()).collect(),
        }
    }

    fn lw(&self, i: usize) -> &str {
        self.lower.get(i).map(String::as_str).unwrap_or("")
    }

    fn is_word(&self, i: usize) -> bool {
        self.tokens.get(i).is_some_and(Token::is_word)
    }

    /// A lowercase alphabetic word (no capitals, digits, or joiners).
    fn plain(&self, i: usize) -> bool {
        self.tokens
            .get(i)
            .is_some_and(|t| t.surface.chars().all(|c| c.is_ascii_lowercase()))
    }

    fn content(&self, i: usize, min_len: usize) -> bool {
        self.plain(i) && self.lw(i).len() >= min_len && !lexicon::is_function_word(self.lw(i))
    }

    fn neighbor(&self, i: usize, delta: isize) -> &str {
        i.checked_add_signed(delta).map(|j| self.lw(j)).unwrap_or("")
    }

    /// `w` differs from the tokens on both sides of position `i`.
    fn distinct_around(&self, i: usize, w: &str, before: isize, after: isize) -> bool {
        self.neighbor(i, before) != w && self.neighbor(i, after) != w
    }

    /// The edit a corrector will report for `op`, as (corrupted, clean).
    fn edit_for(&self, op: &Op) -> Edit {
        let s = |i: usize| self.tokens[i].surface.clone();
        let (kind, original_text, corrected_text) = match op {
            Op::Replace(i, w) => (EditKind::Substitute, capitalize_like(&s(*i), w), s(*i)),
            Op::Delete(i) => (EditKind::Insert, String::new(), s(*i)),
            Op::InsertBefore(_, w) => (EditKind::Delete, w.clone(), String::new()),
            Op::CommaAfter(_) => (EditKind::Delete, ",".into(), String::new()),
            Op::Swap(i) => (
                EditKind::Substitute,
                format!("{} {}", s(i + 1), s(*i)),
                format!("{} {}", s(*i), s(i + 1)),
            ),
            Op::Duplicate(i) => (EditKind::Delete, s(*i), String::new()),
        };
        Edit {
            kind,
            original_range: 0..0,
            corrected_range: 0..0,
            original_text,
            corrected_text,
            category: None,
        }
    }

    fn yields(&self, op: &Op, category: Category) -> bool {
        match op {
            Op::Duplicate(_) => category == Category::Other,
            _ => classify_edit(&self.edit_for(op)) == category,
        }
    }

    fn candidates(&self, category: Category, i: usize) -> Vec<Op> {
        let w = self.lw(i);
        let mut ops = Vec::new();
        match category {
            Category::SubjectVerbAgreement => {
                if let Some(&(a, b)) = lexicon::AGREEMENT_PAIRS.iter().find(|(a, b)| *a == w || *b == w) {
                    let to = if a == w { b } else { a };
                    ops.push(Op::Replace(i, to.into()));
                } else if let Some(&(base, third, _)) = lexicon::verb_entry(w) {
                    if w == base {
                        ops.push(Op::Replace(i, third.into()));
                    } else if w == third {
                        ops.push(Op::Replace(i, base.into()));
                    }
                }
            }
            Category::VerbTense => {
                if let Some(&(a, b)) = lexicon::TENSE_PAIRS.iter().find(|(a, b)| *a == w || *b == w) {
                    let to = if a == w { b } else { a };
                    ops.push(Op::Replace(i, to.into()));
                } else if let Some(&(base, third, past)) = lexicon::verb_entry(w) {
                    if past != base && (w == base || w == third) {
                        ops.push(Op::Replace(i, past.into()));
                    } else if w == past && past != base {
                        ops.push(Op::Replace(i, base.into()));
                    }
                }
            }
            Category::ArticleUsage => {
                if lexicon::is_article(w) && self.plain(i) {
                    ops.push(Op::Delete(i));
                    ops.push(Op::Replace(i, if w == "the" { "a" } else { "the" }.into()));
                } else if i > 0
                    && self.content(i, 3)
                    && self.is_word(i - 1)
                    && !lexicon::is_function_word(self.lw(i - 1))
                {
                    ops.push(Op::InsertBefore(i, "the".into()));
                }
            }
            Category::NounNumber => {
                if self.content(i, 4) && !lexicon::is_verb_form(w) && !w.ends_with("ly") {
                    if w.ends_with('s') && !w.ends_with("ss") && w.len() >= 5 {
                        ops.push(Op::Replace(i, w[..w.len() - 1].into()));
                    } else if !["s", "x", "y", "z", "sh", "ch"].iter().any(|e| w.ends_with(e)) {
                        ops.push(Op::Replace(i, format!("{w}s")));
                    }
                }
            }
            Category::Preposition => {
                if lexicon::is_core_preposition(w) && self.plain(i) {
                    let to = match w {
                        "in" => "on",
                        "on" => "in",
                        "at" => "in",
                        "to" => "for",
                        "for" => "to",
                        "of" => "about",
                        "with" => "by",
                        _ => "with",
                    };
                    ops.push(Op::Replace(i, to.into()));
                    ops.push(Op::Delete(i));
                } else if i > 0
                    && self.content(i, 3)
                    && self.is_word(i - 1)
                    && !lexicon::is_function_word(self.lw(i - 1))
                {
                    ops.push(Op::InsertBefore(i, "of".into()));
                }
            }
            Category::WordChoice => {
                if let Some(&(a, b)) = lexicon::WORD_CHOICE.iter().find(|(a, b)| *a == w || *b == w) {
                    ops.push(Op::Replace(i, if a == w { b } else { a }.into()));
                }
                if self.content(i, 4) && !lexicon::is_verb_form(w) && !w.starts_with("thing") {
                    ops.push(Op::Replace(i, "thing".into()));
                }
            }
            Category::WordForm => {
                if self.content(i, 4) && !lexicon::is_verb_form(w) {
                    if let Some(stem) = w.strip_suffix("ily") {
                        ops.push(Op::Replace(i, format!("{stem}y")));
                    } else if let Some(stem) = w.strip_suffix("ly").filter(|s| s.len() >= 4) {
                        ops.push(Op::Replace(i, stem.into()));
                    } else if !["s", "y", "e"].iter().any(|e| w.ends_with(e)) {
                        ops.push(Op::Replace(i, format!("{w}ly")));
                    }
                }
            }
            Category::Spelling => {
                if self.content(i, 5) {
                    let c: Vec<char> = w.chars().collect();
                    if let Some(k) = (1..c.len() - 2).find(|&k| c[k] != c[k + 1]) {
                        let mut m = c.clone();
                        m.swap(k, k + 1);
                        ops.push(Op::Replace(i, m.into_iter().collect()));
                    }
                }
            }
            Category::Punctuation => {
                if w == "," && self.is_word(i.wrapping_sub(1)) && self.is_word(i + 1) {
                    ops.push(Op::Delete(i));
                }
                if self.plain(i) && self.plain(i + 1) {
                    ops.push(Op::CommaAfter(i));
                }
            }
            Category::WordOrder => {
                if self.plain(i) && self.plain(i + 1) && w != self.lw(i + 1) {
                    let (x, y) = (w, self.lw(i + 1));
                    let outside = [self.neighbor(i, -1), self.lw(i + 2)];
                    if !outside.contains(&x) && !outside.contains(&y) {
                        ops.push(Op::Swap(i));
                    }
                }
            }
            Category::Other => {
                if self.content(i, 3) && self.distinct_around(i, w, -1, 1) {
                    ops.push(Op::Duplicate(i));
                }
            }
        }
        // Reject changes the aligner could place ambiguously.
        ops.retain(|op| match op {
            Op::Replace(i, to) => self.distinct_around(*i, &to.to_lowercase(), -1, 1),
            Op::Delete(i) => self.distinct_around(*i, self.lw(*i), -1, 1),
            Op::InsertBefore(i, to) => self.distinct_around(*i, to, -1, 0),
            _ => true,
        });
        ops
    }

}

/// Everything [`corrupt`] needs to know about one essay that does not
/// depend on the target profile.
struct Sites {
    text: String,
    tokens: Vec<Token>,
    /// Byte span of each token in `text`.
    bytes: Vec<Range<usize>>,
    /// Per category, indexed by discriminant: the token positions with at
    /// least one op yielding that category, ascending, with those ops in
    /// preference order.
    options: Vec<Vec<(usize, Vec<Op>)>>,
}

impl Sites {
    fn analyze(essay: &str) -> Self {
        let text = text::normalize(essay).into_owned();
        let tokens = text::tokenize(&text);
        let bytes = text::raw_tokens(&text)
            .iter()
            .map(|t| {
                let start = t.surface.as_ptr() as usize - text.as_ptr() as usize;
                start..start + t.surface.len()
            })
            .collect();
        let c = Corruptor::new(&tokens);
        let options = Category::ALL
            .iter()
            .map(|&category| {
                (0..tokens.len())
                    .filter_map(|i| {
                        let mut ops = c.candidates(category, i);
                        ops.retain(|op| c.yields(op, category));
                        (!ops.is_empty()).then_some((i, ops))
                    })
                    .collect()
            })
            .collect();
        Sites {
            text,
            tokens,
            bytes,
            options,
        }
    }

    fn corrupt(&self, target: &ErrorProfile, shortfall: u32) -> String {
        if self.tokens.is_empty() {
            return self.text.clone();
        }
        let mut claims = Vec::new();
        let mut ops = Vec::new();
        let mut missing = 0;
        for category in PLAN_ORDER {
            let n = target.get(category);
            if n == 0 {
                continue;
            }
            let offset = (category as usize) * self.tokens.len() / Category::ALL.len();
            missing += n - self.plan(category, n, offset, &mut claims, &mut ops);
        }
        for category in FALLBACK {
            if missing == 0 {
                break;
            }
            missing -= self.plan(category, missing, 0, &mut claims, &mut ops);
        }
        let keep = ops.len().saturating_sub(shortfall as usize);
        ops.truncate(keep);
        self.apply(ops)
    }

    /// Picks up to `n` sites for `category`, scanning positions from
    /// `offset` and wrapping around.
    fn plan(
        &self,
        category: Category,
        n: u32,
        offset: usize,
        claims: &mut Vec<(usize, usize)>,
        out: &mut Vec<Op>,
    ) -> u32 {
        let list = &self.options[category as usize];
        let split = list.partition_point(|(i, _)| *i < offset);
        let mut placed = 0;
        for (_, ops) in list[split..].iter().chain(&list[..split]) {
            if placed == n {
                break;
            }
            let free = ops.iter().find(|op| {
                let c = op.claim();
                claims.iter().all(|&o| separated(o, c))
            });
            if let Some(op) = free {
                claims.push(op.claim());
                out.push(op.clone());
                placed += 1;
            }
        }
        placed
    }

    fn apply(&self, mut ops: Vec<Op>) -> String {
        let (text, tokens, bytes) = (&self.text, &self.tokens, &self.bytes);
        ops.sort_by_key(|op| op.claim().0);
        let mut out = String::with_capacity(text.len() + 16 * ops.len());
        let mut copied = 0;
        for op in ops {
            debug_assert!(op.anchor() < tokens.len());
            let at = |start: usize, out: &mut String, copied: &mut usize| {
                out.push_str(&text[*copied..start]);
                *copied = start;
            };
            match &op {
                Op::Replace(i, w) => {
                    at(bytes[*i].start, &mut out, &mut copied);
                    out.push_str(&capitalize_like(&tokens[*i].surface, w));
                    copied = bytes[*i].end;
                }
                Op::Delete(i) => {
                    let s = bytes[*i].clone();
                    let r = if !tokens[*i].is_word() {
                        s
                    } else if *i + 1 < tokens.len() && bytes[*i + 1].start > s.end {
                        s.start..bytes[*i + 1].start
                    } else if *i > 0 {
                        bytes[*i - 1].end..s.end
                    } else {
                        s
                    };
                    at(r.start, &mut out, &mut copied);
                    copied = r.end;
                }
                Op::InsertBefore(i, w) => {
                    at(bytes[*i].start, &mut out, &mut copied);
                    out.push_str(w);
                    out.push(' ');
                }
                Op::CommaAfter(i) => {
                    at(bytes[*i].end, &mut out, &mut copied);
                    out.push(',');
                }
                Op::Swap(i) => {
                    let (a, b) = (bytes[*i].clone(), bytes[*i + 1].clone());
                    at(a.start, &mut out, &mut copied);
                    out.push_str(&text[b.clone()]);
                    out.push_str(&text[a.end..b.start]);
                    out.push_str(&text[a.clone()]);
                    copied = b.end;
                }
                Op::Duplicate(i) => {
                    let w = &text[bytes[*i].clone()];
                    at(bytes[*i].start, &mut out, &mut copied);
                    out.push_str(w);
                    out.push(' ');
                    out.push_str(w);
                    copied = bytes[*i].end;
                }
            }
        }
        out.push_str(&text[copied..]);
        out
    }
}

/// Plants `target` errors into `essay`, minus `shortfall` of them.
///
/// Every planted error is a separate edit: any two sites are separated by
/// at least two untouched tokens, so a diff against the clean essay reports
/// one edit per planted error.
pub fn corrupt(essay: &str, target: &ErrorProfile, shortfall: u32) -> String {
    Sites::analyze(essay).corrupt(target, shortfall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::Message;
    use crate::edits::extract_edits;
    use crate::taxonomy::profile_from_edits;

    fn profile_via_mock(mock: &MockBackend, clean: &str, corrupted: &str) -> ErrorProfile {
        let listed = mock.list_changes(corrupted, clean);
        let items = parse_change_list(&listed).items;
        let edits = extract_edits(corrupted, clean);
        let rec = crate::edits::reconcile(&edits, &items);
        profile_from_edits(&edits, &rec.hints(&items, edits.len()))
    }

    #[test]
    fn single_category_injection_is_exact() {
        let mock = MockBackend::new();
        for draft in DRAFTS {
            for category in Category::ALL {
                for n in [1, 3, 6] {
                    let target = ErrorProfile::from_counts([(category, n)]);
                    let corrupted = corrupt(draft, &target, 0);
                    let got = profile_via_mock(&mock, draft, &corrupted);
                    assert_eq!(got, target, "{category} x{n}\n{corrupted}");
                }
            }
        }
    }

    #[test]
    fn plant_matches_corrupt() {
        let mock = MockBackend::new();
        let target = ErrorProfile::from_counts([(Category::Spelling, 2), (Category::VerbTense, 3)]);
        for _ in 0..2 {
            assert_eq!(mock.plant(DRAFTS[1], &target, 1), corrupt(DRAFTS[1], &target, 1));
        }
    }

    #[test]
    fn mixed_injection_is_exact() {
        let mock = MockBackend::new();
        let target = ErrorProfile::from_counts(Category::ALL.map(|c| (c, 1)));
        for draft in DRAFTS {
            let corrupted = corrupt(draft, &target, 0);
            assert_eq!(profile_via_mock(&mock, draft, &corrupted), target, "{corrupted}");
        }
    }

    #[test]
    fn shortfall_drops_errors() {
        let target = ErrorProfile::from_counts([(Category::Spelling, 3), (Category::ArticleUsage, 2)]);
        let corrupted = corrupt(DRAFTS[0], &target, 2);
        assert_eq!(extract_edits(&corrupted, DRAFTS[0]).len(), 3);
    }

    #[test]
    fn correction_snaps_to_nearby_reference_only() {
        let mock = MockBackend::new();
        let target = ErrorProfile::from_counts([(Category::VerbTense, 4), (Category::Spelling, 4)]);
        let corrupted = corrupt(DRAFTS[1], &target, 0);
        assert_eq!(mock.correct(&corrupted), DRAFTS[1]);
        let unrelated = "Cats sleep most of the day. They wake up at night and hunt.";
        assert_eq!(mock.correct(unrelated), unrelated);
    }

    #[test]
    fn repeated_word_label() {
        let mock = MockBackend::new();
        let listed = mock.list_changes("I like like the sea.", "I like the sea.");
        assert_eq!(listed, "- 'like' → '' (Repeated word)");
        assert_eq!(mock.count_errors(&listed), "- Other error: 1\nTotal corrections: 1");
    }

    #[test]
    fn answers_rendered_prompts() {
        let mock = MockBackend::new();
        let prompts = PromptSet::builtin();
        let req = |text: String| CompletionRequest::new("m", vec![Message::user(text)], 0.0, 100).unwrap();
        let draft = mock
            .complete(&req(prompts.get(Stage::Draft).render(&[
                ("topic", TOPICS[0]),
                ("min_sentences", "6"),
                ("max_sentences", "10"),
                ("min_words", "70"),
                ("max_words", "130"),
            ]).unwrap()))
            .unwrap();
        assert_eq!(draft, DRAFTS[0]);
        assert!(mock.complete(&req("Tell me a joke.".into())).is_err());
    }
}
