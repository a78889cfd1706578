//! Canonical error categories, error profiles, and edit classification.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::edits::{Edit, EditKind};
use crate::lexicon;
use crate::text::{self, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    SubjectVerbAgreement,
    VerbTense,
    ArticleUsage,
    NounNumber,
    Preposition,
    WordChoice,
    WordForm,
    Spelling,
    Punctuation,
    WordOrder,
    Other,
}

impl Category {
    pub const ALL: [Category; 11] = [
        Category::SubjectVerbAgreement,
        Category::VerbTense,
        Category::ArticleUsage,
        Category::NounNumber,
        Category::Preposition,
        Category::WordChoice,
        Category::WordForm,
        Category::Spelling,
        Category::Punctuation,
        Category::WordOrder,
        Category::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::SubjectVerbAgreement => "subject_verb_agreement",
            Category::VerbTense => "verb_tense",
            Category::ArticleUsage => "article_usage",
            Category::NounNumber => "noun_number",
            Category::Preposition => "preposition",
            Category::WordChoice => "word_choice",
            Category::WordForm => "word_form",
            Category::Spelling => "spelling",
            Category::Punctuation => "punctuation",
            Category::WordOrder => "word_order",
            Category::Other => "other",
        }
    }

    /// Label used in the step-3 list format.
    pub fn display_name(self) -> &'static str {
        match self {
            Category::SubjectVerbAgreement => "Subject-verb agreement error",
            Category::VerbTense => "Verb tense error",
            Category::ArticleUsage => "Incorrect article usage",
            Category::NounNumber => "Singular/plural noun error",
            Category::Preposition => "Incorrect preposition",
            Category::WordChoice => "Word choice error",
            Category::WordForm => "Word form error",
            Category::Spelling => "Spelling error",
            Category::Punctuation => "Punctuation error",
            Category::WordOrder => "Word order error",
            Category::Other => "Other error",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category `{0}`")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

/// Ordered keyword table; first hit wins.
const LABEL_KEYWORDS: &[(&[&str], Category)] = &[
    (&["subject verb", "agreement"], Category::SubjectVerbAgreement),
    (&["article", "determiner"], Category::ArticleUsage),
    (&["tense"], Category::VerbTense),
    (&["plural", "singular", "noun number"], Category::NounNumber),
    (&["preposition"], Category::Preposition),
    (&["spelling", "misspell", "typo"], Category::Spelling),
    (&["punctuation", "comma", "apostrophe"], Category::Punctuation),
    (&["order"], Category::WordOrder),
    (&["word choice", "vocabulary", "wrong word", "collocation"], Category::WordChoice),
    (&["form", "part of speech"], Category::WordForm),
];

/// Maps a free-form category label onto the closed taxonomy.
pub fn normalize_label(raw: &str) -> Category {
    if let Some(&c) = Category::ALL.iter().find(|c| c.display_name() == raw) {
        return c;
    }
    // Lowercased words separated and surrounded by single spaces.
    let mut cleaned = String::with_capacity(raw.len() + 2);
    cleaned.push(' ');
    for c in raw.chars() {
        if c.is_alphanumeric() {
            cleaned.push(c.to_ascii_lowercase());
        } else if !cleaned.ends_with(' ') {
            cleaned.push(' ');
        }
    }
    if !cleaned.ends_with(' ') {
        cleaned.push(' ');
    }
    for (keys, cat) in LABEL_KEYWORDS {
        if keys.iter().any(|k| cleaned.contains(k)) {
            return *cat;
        }
    }
    Category::Other
}

/// Category → count map. Only strictly positive counts are stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ErrorProfile {
    counts: BTreeMap<Category, u32>,
}

impl ErrorProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<I: IntoIterator<Item = (Category, u32)>>(counts: I) -> Self {
        let mut p = Self::new();
        for (c, n) in counts {
            p.add_count(c, n);
        }
        p
    }

    pub fn add_count(&mut self, category: Category, n: u32) {
        if n > 0 {
            *self.counts.entry(category).or_insert(0) += n;
        }
    }

    pub fn get(&self, category: Category) -> u32 {
        self.counts.get(&category).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Non-zero entries in canonical category order.
    pub fn iter(&self) -> impl Iterator<Item = (Category, u32)> + '_ {
        self.counts.iter().map(|(c, n)| (*c, *n))
    }

    /// Signed per-category difference `self − other`, non-zero entries only.
    pub fn delta(&self, other: &ErrorProfile) -> BTreeMap<Category, i64> {
        Category::ALL
            .into_iter()
            .filter_map(|c| {
                let d = i64::from(self.get(c)) - i64::from(other.get(c));
                (d != 0).then_some((c, d))
            })
            .collect()
    }

    /// The step-3 list format: one `- <label>: <n>` line per category and a
    /// closing `Total corrections: <n>` line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (c, n) in self.iter() {
            out.push_str(&format!("- {}: {}\n", c.display_name(), n));
        }
        out.push_str(&format!("Total corrections: {}", self.total()));
        out
    }
}

impl Add for ErrorProfile {
    type Output = ErrorProfile;

    fn add(mut self, rhs: ErrorProfile) -> ErrorProfile {
        self += rhs;
        self
    }
}

impl AddAssign for ErrorProfile {
    fn add_assign(&mut self, rhs: ErrorProfile) {
        for (c, n) in rhs.counts {
            self.add_count(c, n);
        }
    }
}

impl Serialize for ErrorProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut flat: BTreeMap<&str, u32> = self.iter().map(|(c, n)| (c.as_str(), n)).collect();
        flat.insert("total", self.total());
        flat.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ErrorProfile {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let flat = BTreeMap::<String, u32>::deserialize(deserializer)?;
        let mut profile = ErrorProfile::new();
        let mut declared = None;
        for (k, v) in flat {
            if k == "total" {
                declared = Some(v);
            } else {
                let c: Category = k.parse().map_err(D::Error::custom)?;
                profile.add_count(c, v);
            }
        }
        match declared {
            Some(t) if t != profile.total() => Err(D::Error::custom(format!(
                "profile total {t} does not match category sum {}",
                profile.total()
            ))),
            _ => Ok(profile),
        }
    }
}

/// Outcome of parsing an LLM error-count list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountParse {
    pub profile: ErrorProfile,
    /// The `Total corrections: N` value, when present.
    pub declared_total: Option<u32>,
    /// Skipped lines and total discrepancies, in input order.
    pub issues: Vec<String>,
}

fn strip_list_marker(line: &str) -> &str {
    let t = line.trim();
    let t = t.trim_start_matches(['-', '*', '\u{2022}', '+']).trim_start();
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 && t[digits..].starts_with(['.', ')']) {
        return t[digits + 1..].trim_start();
    }
    t
}

fn parse_count(value: &str) -> Result<u32, &'static str> {
    let first = value
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_end_matches([',', ';', '.']);
    match first.parse::<i64>() {
        Ok(n) if n < 0 => Err("negative count"),
        Ok(n) => u32::try_from(n).map_err(|_| "count out of range"),
        Err(_) => Err("non-integer count"),
    }
}

/// Parses `<label>: <integer>` lines and an optional `Total corrections: N`
/// line. The profile total is always the sum of the parsed items.
pub fn parse_error_counts(llm_output: &str) -> CountParse {
    let mut out = CountParse::default();
    for (idx, raw) in llm_output.lines().enumerate() {
        let line = strip_list_marker(raw).trim_matches(['*', '_']);
        let Some(colon) = line.rfind(':') else { continue };
        let label = line[..colon].trim().trim_matches(['*', '"', '\'']).trim();
        let value = line[colon + 1..].trim().trim_matches(['*', '"']);
        if label.is_empty() {
            continue;
        }
        let is_total = label.to_lowercase().starts_with("total");
        match parse_count(value) {
            Ok(n) if is_total => out.declared_total = Some(n),
            Ok(n) => out.profile.add_count(normalize_label(label), n),
            Err(why) => out.issues.push(format!("line {}: {why}: {}", idx + 1, raw.trim())),
        }
    }
    if let Some(declared) = out.declared_total {
        let sum = out.profile.total();
        if declared != sum {
            out.issues.push(format!(
                "declared total {declared} disagrees with item sum {sum}; using {sum}"
            ));
        }
    }
    out
}

/// (stem, suffix) readings of an inflected word form.
fn inflections(word: &str) -> Vec<(String, &'static str)> {
    let w = text::lowercase(word);
    let mut out = Vec::with_capacity(4);
    out.push((w.to_string(), ""));
    let n = w.len();
    let mut push = |stem: &str, suffix: &'static str| {
        if stem.len() >= 2 {
            out.push((stem.to_string(), suffix));
        }
    };
    if let Some(s) = w.strip_suffix("ies") {
        push(&format!("{s}y"), "s");
    }
    if let Some(s) = w.strip_suffix("es") {
        push(s, "es");
    }
    if w.ends_with('s') && !w.ends_with("ss") {
        push(&w[..n - 1], "s");
    }
    if let Some(s) = w.strip_suffix("ied") {
        push(&format!("{s}y"), "ed");
    }
    if let Some(s) = w.strip_suffix("ed") {
        push(s, "ed");
        push(&format!("{s}e"), "ed");
        let b = s.as_bytes();
        if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] {
            push(&s[..s.len() - 1], "ed");
        }
    }
    if let Some(s) = w.strip_suffix("ing") {
        push(s, "ing");
        push(&format!("{s}e"), "ing");
        let b = s.as_bytes();
        if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] {
            push(&s[..s.len() - 1], "ing");
        }
    }
    out
}

/// Derivational (stem, suffix) readings used for word-form errors.
fn derivations(word: &str) -> Vec<(String, &'static str)> {
    let w = text::lowercase(word);
    let mut out = Vec::with_capacity(4);
    out.push((w.to_string(), ""));
    if let Some(s) = w.strip_suffix("ily") {
        out.push((format!("{s}y"), "ly"));
    }
    if let Some(s) = w.strip_suffix("ally") {
        out.push((s.to_string(), "ly"));
    }
    if let Some(s) = w.strip_suffix("ly") {
        out.push((s.to_string(), "ly"));
        out.push((format!("{s}le"), "ly"));
    }
    for suffix in ["ness", "ful", "ment", "ity"] {
        if let Some(s) = w.strip_suffix(suffix) {
            out.push((s.to_string(), suffix));
        }
    }
    out.retain(|(s, _)| s.len() >= 3);
    out
}

fn shared_suffix_pair(
    a: &str,
    b: &str,
    readings: fn(&str) -> Vec<(String, &'static str)>,
) -> Option<(&'static str, &'static str)> {
    let ra = readings(a);
    let rb = readings(b);
    for (sa, xa) in &ra {
        for (sb, xb) in &rb {
            if sa == sb && xa != xb {
                return Some((xa, xb));
            }
        }
    }
    None
}

fn letter_multiset(s: &str) -> Vec<char> {
    let mut v: Vec<char> = text::lowercase(s).chars().filter(|c| c.is_alphanumeric()).collect();
    v.sort_unstable();
    v
}

fn char_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = text::lowercase(a).chars().collect();
    let b: Vec<char> = text::lowercase(b).chars().collect();
    crate::edits::align(&a, &b).cost
}

/// Rule-based category for an edit; first matching rule wins.
pub fn classify_edit(edit: &Edit) -> Category {
    let (on, cn) = (text::normalize(&edit.original_text), text::normalize(&edit.corrected_text));
    let (orig, corr) = (text::raw_tokens(&on), text::raw_tokens(&cn));
    let changed: &[text::RawToken] = match edit.kind {
        EditKind::Insert => &corr,
        EditKind::Delete => &orig,
        EditKind::Substitute => &[],
    };

    // Articles.
    if changed.len() == 1 && lexicon::is_article(changed[0].surface) {
        return Category::ArticleUsage;
    }
    if orig.len() == 1
        && corr.len() == 1
        && lexicon::is_article(orig[0].surface)
        && lexicon::is_article(corr[0].surface)
    {
        return Category::ArticleUsage;
    }

    // Punctuation-only on every non-empty side.
    let all_punct = |ts: &[text::RawToken]| ts.iter().all(|t| t.kind == TokenKind::Punctuation);
    if all_punct(&orig) && all_punct(&corr) {
        return Category::Punctuation;
    }

    if orig.len() == 1 && corr.len() == 1 {
        let (a, b) = (orig[0].surface, corr[0].surface);
        if lexicon::pair_in(lexicon::AGREEMENT_PAIRS, a, b) {
            return Category::SubjectVerbAgreement;
        }
        if lexicon::pair_in(lexicon::TENSE_PAIRS, a, b) {
            return Category::VerbTense;
        }
        if let Some((xa, xb)) = shared_suffix_pair(a, b, inflections) {
            let number_like = |x: &str| matches!(x, "" | "s" | "es");
            if number_like(xa) && number_like(xb) {
                return if lexicon::is_verb_form(a) || lexicon::is_verb_form(b) {
                    Category::SubjectVerbAgreement
                } else {
                    Category::NounNumber
                };
            }
            return Category::VerbTense;
        }
        if let (Some(ea), Some(eb)) = (lexicon::verb_entry(a), lexicon::verb_entry(b)) {
            if ea == eb {
                // Irregular forms of one lexicon verb, e.g. go/went.
                let third = |w: &str| w.eq_ignore_ascii_case(ea.1);
                return if third(a) || third(b) {
                    if a.eq_ignore_ascii_case(ea.2) || b.eq_ignore_ascii_case(ea.2) {
                        Category::VerbTense
                    } else {
                        Category::SubjectVerbAgreement
                    }
                } else {
                    Category::VerbTense
                };
            }
        }
    }

    // Same tokens in a different order.
    if edit.kind == EditKind::Substitute && orig.len() >= 2 && orig.len() == corr.len() {
        let mut sa: Vec<String> = orig.iter().map(|t| t.surface.to_lowercase()).collect();
        let mut sb: Vec<String> = corr.iter().map(|t| t.surface.to_lowercase()).collect();
        sa.sort();
        sb.sort();
        if sa == sb {
            return Category::WordOrder;
        }
    }

    if orig.len() == 1 && corr.len() == 1 {
        let (a, b) = (orig[0].surface, corr[0].surface);
        if shared_suffix_pair(a, b, derivations).is_some() {
            return Category::WordForm;
        }
        let ma = letter_multiset(a);
        if ma == letter_multiset(b) && !a.eq_ignore_ascii_case(b) {
            return Category::Spelling;
        }
        if a.chars().count().min(b.chars().count()) >= 5 && char_distance(a, b) <= 2 {
            return Category::Spelling;
        }
        if lexicon::is_preposition(a) && lexicon::is_preposition(b) {
            return Category::Preposition;
        }
    }

    if changed.len() == 1 && lexicon::is_core_preposition(changed[0].surface) {
        return Category::Preposition;
    }

    match edit.kind {
        EditKind::Substitute => Category::WordChoice,
        EditKind::Insert | EditKind::Delete => Category::WordOrder,
    }
}

/// Assigns each edit its category: the normalized hint when one exists,
/// otherwise the rule-based classification.
pub fn categorize(edits: &[Edit], hints: &[Option<&str>]) -> Vec<Edit> {
    edits
        .iter()
        .enumerate()
        .map(|(i, e)| Edit {
            category: Some(category_of(e, hints.get(i).copied().flatten())),
            ..e.clone()
        })
        .collect()
}

fn category_of(edit: &Edit, hint: Option<&str>) -> Category {
    match hint {
        Some(label) => normalize_label(label),
        None => classify_edit(edit),
    }
}

/// One count per edit. `hints[i]` is the LLM label matched to `edits[i]`.
pub fn profile_from_edits(edits: &[Edit], hints: &[Option<&str>]) -> ErrorProfile {
    let mut profile = ErrorProfile::new();
    for (i, e) in edits.iter().enumerate() {
        profile.add_count(category_of(e, hints.get(i).copied().flatten()), 1);
    }
    profile
}
