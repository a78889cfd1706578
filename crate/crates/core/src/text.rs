//! Tokenization, sentence segmentation, and word counting.
//!
//! All offsets are character offsets (not bytes) into the NFC-normalized
//! form of the input. For input that is already NFC, which includes all
//! ASCII, that is the input itself.

use std::borrow::Cow;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// Half-open character range in the normalized source.
    pub span: Range<usize>,
    pub kind: TokenKind,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

impl PartialEq<str> for Token {
    fn eq(&self, other: &str) -> bool {
        self.surface == other
    }
}

/// Canonical composition (NFC). Borrows when the input is already composed.
pub fn normalize(text: &str) -> Cow<'_, str> {
    if text.is_ascii() {
        return Cow::Borrowed(text);
    }
    match is_nfc_quick(text.chars()) {
        IsNormalized::Yes => Cow::Borrowed(text),
        _ => {
            let composed: String = text.nfc().collect();
            if composed == text {
                Cow::Borrowed(text)
            } else {
                Cow::Owned(composed)
            }
        }
    }
}

/// Class of each ASCII byte.
const SPACE: u8 = 1;
const WORD: u8 = 2;
static ASCII_CLASS: [u8; 128] = {
    let mut t = [0u8; 128];
    let mut b = 0;
    while b < 128 {
        let c = b as u8;
        t[b] = if c.is_ascii_alphanumeric() {
            WORD
        } else if c.is_ascii_whitespace() || c == 0x0b {
            SPACE
        } else {
            0
        };
        b += 1;
    }
    t
};

#[inline]
fn is_word_char(c: char) -> bool {
    if c.is_ascii() {
        c.is_ascii_alphanumeric()
    } else {
        c.is_alphanumeric()
    }
}

#[inline]
fn is_space(c: char) -> bool {
    if c.is_ascii() {
        c.is_ascii_whitespace() || c == '\u{0b}'
    } else {
        c.is_whitespace()
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}')
}

/// A token borrowed from already-normalized text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RawToken<'a> {
    pub surface: &'a str,
    pub start: usize,
    pub end: usize,
    pub kind: TokenKind,
}

/// The tokenizer proper; expects NFC input.
pub(crate) struct RawTokens<'a> {
    text: &'a str,
    byte: usize,
    char_pos: usize,
    /// All-ASCII input: byte offsets are character offsets.
    ascii: bool,
}

impl<'a> RawTokens<'a> {
    pub(crate) fn new(normalized: &'a str) -> Self {
        RawTokens {
            text: normalized,
            byte: 0,
            char_pos: 0,
            ascii: normalized.is_ascii(),
        }
    }
}

impl<'a> RawTokens<'a> {
    fn next_ascii(&mut self) -> Option<RawToken<'a>> {
        let bytes = self.text.as_bytes();
        let class = |i: usize| bytes.get(i).map_or(0, |&b| ASCII_CLASS[usize::from(b)]);
        let mut i = self.byte;
        while class(i) == SPACE {
            i += 1;
        }
        if i >= bytes.len() {
            self.byte = i;
            return None;
        }
        let start = i;
        i += 1;
        let kind = if class(start) == WORD {
            loop {
                while class(i) == WORD {
                    i += 1;
                }
                if matches!(bytes.get(i), Some(b'\'' | b'-')) && class(i + 1) == WORD {
                    i += 2;
                } else {
                    break;
                }
            }
            TokenKind::Word
        } else {
            TokenKind::Punctuation
        };
        self.byte = i;
        Some(RawToken {
            surface: &self.text[start..i],
            start,
            end: i,
            kind,
        })
    }

    #[inline]
    fn char_at(&self, byte: usize) -> Option<char> {
        let &b = self.text.as_bytes().get(byte)?;
        if b < 0x80 {
            Some(char::from(b))
        } else {
            self.text[byte..].chars().next()
        }
    }
}

impl<'a> Iterator for RawTokens<'a> {
    type Item = RawToken<'a>;

    fn next(&mut self) -> Option<RawToken<'a>> {
        if self.ascii {
            return self.next_ascii();
        }
        let bytes = self.text.as_bytes();
        while let Some(&b) = bytes.get(self.byte) {
            if b >= 0x80 || ASCII_CLASS[usize::from(b)] != SPACE {
                break;
            }
            self.byte += 1;
            self.char_pos += 1;
        }
        let c = loop {
            let c = self.char_at(self.byte)?;
            if !is_space(c) {
                break c;
            }
            self.byte += c.len_utf8();
            self.char_pos += 1;
        };
        let (b0, c0) = (self.byte, self.char_pos);
        self.byte += c.len_utf8();
        self.char_pos += 1;
        let kind = if is_word_char(c) {
            loop {
                let run = bytes[self.byte..]
                    .iter()
                    .take_while(|&&b| b < 0x80 && ASCII_CLASS[usize::from(b)] == WORD)
                    .count();
                self.byte += run;
                self.char_pos += run;
                let Some(n) = self.char_at(self.byte) else { break };
                if is_word_char(n) {
                    self.byte += n.len_utf8();
                    self.char_pos += 1;
                } else if is_joiner(n) {
                    match self.char_at(self.byte + n.len_utf8()) {
                        Some(m) if is_word_char(m) => {
                            self.byte += n.len_utf8() + m.len_utf8();
                            self.char_pos += 2;
                        }
                        _ => break,
                    }
                } else {
                    break;
                }
            }
            TokenKind::Word
        } else {
            TokenKind::Punctuation
        };
        Some(RawToken {
            surface: &self.text[b0..self.byte],
            start: c0,
            end: self.char_pos,
            kind,
        })
    }
}

/// All tokens of already-normalized text.
pub(crate) fn raw_tokens(normalized: &str) -> Vec<RawToken<'_>> {
    let mut out = Vec::with_capacity(normalized.len() / 4 + 1);
    out.extend(RawTokens::new(normalized));
    out
}

/// Splits text into word and punctuation tokens.
///
/// A word is a maximal run of letters and digits, where an apostrophe or
/// hyphen sitting between two such characters stays inside the word
/// (`don't`, `well-known`). Every other non-whitespace character is a
/// punctuation token of its own.
pub fn tokenize(text: &str) -> Vec<Token> {
    let text = normalize(text);
    let mut out = Vec::with_capacity(text.len() / 4 + 1);
    out.extend(RawTokens::new(&text).map(|t| Token {
            surface: t.surface.to_string(),
            span: t.start..t.end,
            kind: t.kind,
        }));
    out
}

/// Joins token surfaces, putting a single space wherever the source had
/// whitespace between two tokens.
pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (idx, tok) in tokens.iter().enumerate() {
        if idx > 0 && tok.span.start > tokens[idx - 1].span.end {
            out.push(' ');
        }
        out.push_str(&tok.surface);
    }
    out
}

/// Sentence spans (character ranges into the normalized text).
///
/// A sentence ends at `.`, `!` or `?` when followed by whitespace or the
/// end of the text. Trailing text without a terminator is one sentence.
/// Spans start at the first non-whitespace character.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    let text = normalize(text);
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    // One past the last non-whitespace character seen.
    let mut content_end = 0;
    let mut chars = text.chars().enumerate().peekable();
    while let Some((i, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        content_end = i + 1;
        let s = *start.get_or_insert(i);
        if matches!(c, '.' | '!' | '?') && chars.peek().map_or(true, |&(_, n)| n.is_whitespace()) {
            spans.push(s..i + 1);
            start = None;
        }
    }
    if let Some(s) = start {
        spans.push(s..content_end);
    }
    spans
}

pub fn count_sentences(text: &str) -> usize {
    if !text.is_ascii() {
        return split_sentences(text).len();
    }
    let b = text.as_bytes();
    let mut count = 0;
    let mut open = false;
    for (i, &c) in b.iter().enumerate() {
        if c.is_ascii_whitespace() || c == 0x0b {
            continue;
        }
        open = true;
        if matches!(c, b'.' | b'!' | b'?') && b.get(i + 1).map_or(true, |&n| n.is_ascii_whitespace() || n == 0x0b) {
            count += 1;
            open = false;
        }
    }
    count + usize::from(open)
}

pub fn count_words(text: &str) -> usize {
    if text.is_ascii() {
        // A word starts at every alphanumeric byte that does not continue
        // a word, either directly or across a joiner.
        let b = text.as_bytes();
        let alnum = |i: usize| b[i].is_ascii_alphanumeric();
        return (0..b.len())
            .filter(|&i| {
                alnum(i)
                    && !(i >= 1 && alnum(i - 1))
                    && !(i >= 2 && matches!(b[i - 1], b'\'' | b'-') && alnum(i - 2))
            })
            .count();
    }
    let text = normalize(text);
    RawTokens::new(&text).filter(|t| t.kind == TokenKind::Word).count()
}

/// `s` lowercased, borrowing when it has no uppercase letters.
pub(crate) fn lowercase(s: &str) -> Cow<'_, str> {
    if s.is_ascii() && !s.bytes().any(|b| b.is_ascii_uppercase()) {
        Cow::Borrowed(s)
    } else {
        Cow::Owned(s.to_lowercase())
    }
}

/// Lowercased text with all whitespace removed; the comparison key used for
/// "ignore formatting differences".
pub fn loose_key(text: &str) -> String {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Whitespace-insensitive (but case-sensitive) equality.
pub fn eq_ignoring_whitespace(a: &str, b: &str) -> bool {
    a.chars()
        .filter(|c| !c.is_whitespace())
        .eq(b.chars().filter(|c| !c.is_whitespace()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(split_sentences("").is_empty());
        assert_eq!(count_words(""), 0);
    }

    #[test]
    fn splits_trailing_period() {
        assert_eq!(surfaces("He go to school."), ["He", "go", "to", "school", "."]);
        assert_eq!(count_words("He go to school."), 4);
    }

    #[test]
    fn keeps_internal_apostrophe_and_hyphen() {
        assert_eq!(surfaces("don't stop"), ["don't", "stop"]);
        assert_eq!(count_words("don't stop"), 2);
        assert_eq!(surfaces("a well-known 'quote'"), ["a", "well-known", "'", "quote", "'"]);
        assert_eq!(surfaces("rock-"), ["rock", "-"]);
    }

    #[test]
    fn spans_are_char_offsets() {
        let toks = tokenize("Māori café, ok");
        assert_eq!(toks[0].span, 0..5);
        assert_eq!(toks[1].span, 6..10);
        assert_eq!(toks[2].surface, ",");
        assert_eq!(toks[2].span, 10..11);
    }

    #[test]
    fn decomposed_input_is_composed_first() {
        let decomposed = "cafe\u{301} au lait";
        let toks = tokenize(decomposed);
        assert_eq!(toks[0].surface, "caf\u{e9}");
        assert_eq!(toks[0].span, 0..4);
    }

    #[test]
    fn sentences() {
        assert_eq!(split_sentences("Hi. Bye.").len(), 2);
        assert_eq!(split_sentences("no terminator"), vec![0..13]);
        assert_eq!(split_sentences("Pi is 3.14 ok!? Yes  "), vec![0..15, 16..19]);
        assert_eq!(split_sentences("  Lead. "), vec![2..7]);
    }

    #[test]
    fn join_uses_source_spacing() {
        let toks = tokenize("I  like   it ,really.");
        assert_eq!(join_tokens(&toks), "I like it ,really.");
    }

    fn arb_text() -> impl Strategy<Value = String> {
        proptest::string::string_regex("[a-zA-Z0-9 '\\-.,!?\n\t\u{e9}\u{101}]{0,60}").unwrap()
    }

    proptest! {
        #[test]
        fn ascii_word_count_matches_tokens(text in "[ab1' .,\\-]{0,30}") {
            let words = tokenize(&text).iter().filter(|t| t.is_word()).count();
            prop_assert_eq!(count_words(&text), words);
        }

        #[test]
        fn ascii_fast_path_matches_general_path(text in "[a-zA-Z0-9 '\\-.,!?\n\t\u{0b}\u{0c}]{0,60}") {
            let fast: Vec<RawToken> = RawTokens::new(&text).collect();
            let general: Vec<RawToken> = RawTokens { ascii: false, ..RawTokens::new(&text) }.collect();
            prop_assert_eq!(fast, general);
        }

        #[test]
        fn sentence_count_matches_spans(text in "[a-z .!?\t\n\u{0b}]{0,40}") {
            prop_assert_eq!(count_sentences(&text), split_sentences(&text).len());
        }

        #[test]
        fn span_reads_back_surface(text in arb_text()) {
            let norm = normalize(&text).into_owned();
            let chars: Vec<char> = norm.chars().collect();
            let toks = tokenize(&text);
            let mut prev_end = 0;
            for t in &toks {
                prop_assert!(t.span.start >= prev_end);
                prop_assert!(t.span.start < t.span.end);
                prev_end = t.span.end;
                let read: String = chars[t.span.clone()].iter().collect();
                prop_assert_eq!(&read, &t.surface);
                if t.is_word() {
                    prop_assert!(t.surface.chars().any(char::is_alphanumeric));
                }
            }
        }

        #[test]
        fn retokenizing_join_is_idempotent(text in arb_text()) {
            let toks = tokenize(&text);
            let again = tokenize(&join_tokens(&toks));
            let a: Vec<_> = toks.iter().map(|t| &t.surface).collect();
            let b: Vec<_> = again.iter().map(|t| &t.surface).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn join_matches_source_modulo_whitespace(text in arb_text()) {
            let joined = join_tokens(&tokenize(&text));
            let squashed = text.split_whitespace().collect::<Vec<_>>().join(" ");
            prop_assert_eq!(joined, squashed);
        }

        #[test]
        fn words_bounded_by_tokens(text in arb_text()) {
            let tokens = tokenize(&text);
            prop_assert!(count_words(&text) <= tokens.len());
            prop_assert_eq!(count_words(&text), tokens.iter().filter(|t| t.is_word()).count());
        }

        #[test]
        fn sentence_spans_cover_non_whitespace(text in arb_text()) {
            let chars: Vec<char> = text.chars().collect();
            let spans = split_sentences(&text);
            let mut covered = vec![false; chars.len()];
            let mut prev_end = 0;
            for s in &spans {
                prop_assert!(s.start >= prev_end && s.start < s.end);
                prev_end = s.end;
                for i in s.clone() { covered[i] = true; }
            }
            for (i, c) in chars.iter().enumerate() {
                prop_assert!(covered[i] || c.is_whitespace());
            }
        }
    }
}
