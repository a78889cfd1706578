//! Small closed word lists used by the edit classifier and the mock backend.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::text;

pub const ARTICLES: &[&str] = &["a", "an", "the"];

pub const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "to", "for", "of", "with", "by", "from", "about", "into", "during",
];

/// The prepositions whose bare insertion or deletion counts as a
/// preposition error.
pub const CORE_PREPOSITIONS: &[&str] = &["in", "on", "at", "to", "for", "of", "with", "by"];

pub const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "my", "your",
    "his", "its", "our", "their",
];

/// Function words the corruptors never treat as content words.
pub const FUNCTION_WORDS: &[&str] = &[
    "and", "or", "but", "so", "because", "if", "when", "while", "that", "this", "these", "those",
    "there", "here", "which", "who", "what", "where", "how", "not", "also", "too", "as", "than",
    "then", "can", "could", "will", "would", "should", "must", "may", "might", "do", "does", "did",
    "is", "are", "was", "were", "be", "been", "am", "has", "have", "had", "very", "more", "most",
    "some", "any", "all", "every", "each", "many", "much", "one", "other", "such", "own", "just",
];

/// Regular verbs: (base, third person singular, past).
pub const VERBS: &[(&str, &str, &str)] = &[
    ("like", "likes", "liked"),
    ("love", "loves", "loved"),
    ("want", "wants", "wanted"),
    ("enjoy", "enjoys", "enjoyed"),
    ("visit", "visits", "visited"),
    ("watch", "watches", "watched"),
    ("play", "plays", "played"),
    ("learn", "learns", "learned"),
    ("help", "helps", "helped"),
    ("seem", "seems", "seemed"),
    ("look", "looks", "looked"),
    ("walk", "walks", "walked"),
    ("talk", "talks", "talked"),
    ("stay", "stays", "stayed"),
    ("start", "starts", "started"),
    ("open", "opens", "opened"),
    ("explain", "explains", "explained"),
    ("explore", "explores", "explored"),
    ("travel", "travels", "traveled"),
    ("imagine", "imagines", "imagined"),
    ("hope", "hopes", "hoped"),
    ("use", "uses", "used"),
    ("prefer", "prefers", "preferred"),
    ("relax", "relaxes", "relaxed"),
    ("change", "changes", "changed"),
    ("remember", "remembers", "remembered"),
    ("show", "shows", "showed"),
    ("study", "studies", "studied"),
    ("try", "tries", "tried"),
    ("need", "needs", "needed"),
    ("decide", "decides", "decided"),
    ("believe", "believes", "believed"),
    ("listen", "listens", "listened"),
    ("follow", "follows", "followed"),
    ("climb", "climbs", "climbed"),
    ("work", "works", "worked"),
    ("live", "lives", "lived"),
    ("move", "moves", "moved"),
    ("discuss", "discusses", "discussed"),
    ("practice", "practices", "practiced"),
    ("finish", "finishes", "finished"),
    ("laugh", "laughs", "laughed"),
    ("cook", "cooks", "cooked"),
    ("taste", "tastes", "tasted"),
    ("attend", "attends", "attended"),
    ("describe", "describes", "described"),
    ("introduce", "introduces", "introduced"),
    ("encourage", "encourages", "encouraged"),
    ("inspire", "inspires", "inspired"),
    ("surprise", "surprises", "surprised"),
    ("teach", "teaches", "taught"),
    ("go", "goes", "went"),
    ("make", "makes", "made"),
    ("take", "takes", "took"),
    ("see", "sees", "saw"),
    ("think", "thinks", "thought"),
    ("feel", "feels", "felt"),
    ("find", "finds", "found"),
    ("give", "gives", "gave"),
    ("know", "knows", "knew"),
    ("get", "gets", "got"),
    ("come", "comes", "came"),
    ("become", "becomes", "became"),
    ("tell", "tells", "told"),
    ("spend", "spends", "spent"),
    ("keep", "keeps", "kept"),
    ("write", "writes", "wrote"),
    ("read", "reads", "read"),
    ("eat", "eats", "ate"),
    ("swim", "swims", "swam"),
    ("run", "runs", "ran"),
    ("bring", "brings", "brought"),
    ("meet", "meets", "met"),
    ("leave", "leaves", "left"),
    ("understand", "understands", "understood"),
    ("grow", "grows", "grew"),
    ("hear", "hears", "heard"),
];

/// Agreement pairs that do not share a stem.
pub const AGREEMENT_PAIRS: &[(&str, &str)] = &[
    ("is", "are"),
    ("was", "were"),
    ("has", "have"),
    ("does", "do"),
    ("am", "is"),
    ("am", "are"),
];

/// Tense pairs that do not share a stem.
pub const TENSE_PAIRS: &[(&str, &str)] = &[
    ("is", "was"),
    ("are", "were"),
    ("am", "was"),
    ("has", "had"),
    ("have", "had"),
    ("will", "would"),
    ("can", "could"),
];

/// (plain, swapped) word-choice substitutions.
pub const WORD_CHOICE: &[(&str, &str)] = &[
    ("good", "nice"),
    ("big", "huge"),
    ("beautiful", "pretty"),
    ("famous", "popular"),
    ("interesting", "funny"),
    ("important", "serious"),
    ("small", "little"),
    ("many", "lots"),
    ("watch", "see"),
    ("say", "tell"),
    ("delicious", "tasty"),
    ("quiet", "silent"),
    ("friends", "mates"),
    ("place", "spot"),
    ("trip", "travel"),
    ("great", "grand"),
    ("people", "persons"),
    ("time", "moment"),
];

fn contains(list: &[&str], word: &str) -> bool {
    list.iter().any(|w| w.eq_ignore_ascii_case(word))
}

pub fn is_article(word: &str) -> bool {
    contains(ARTICLES, word)
}

pub fn is_preposition(word: &str) -> bool {
    contains(PREPOSITIONS, word)
}

pub fn is_core_preposition(word: &str) -> bool {
    contains(CORE_PREPOSITIONS, word)
}

pub fn is_function_word(word: &str) -> bool {
    contains(FUNCTION_WORDS, word) || contains(PRONOUNS, word) || is_article(word) || is_preposition(word)
}

/// The lexicon entry a word form belongs to, if any.
pub fn verb_entry(word: &str) -> Option<&'static (&'static str, &'static str, &'static str)> {
    type Entry = &'static (&'static str, &'static str, &'static str);
    static INDEX: OnceLock<HashMap<&'static str, Entry>> = OnceLock::new();
    let index = INDEX.get_or_init(|| {
        let mut m = HashMap::new();
        // First entry wins, as in a linear scan.
        for e in VERBS {
            for form in [e.0, e.1, e.2] {
                m.entry(form).or_insert(e);
            }
        }
        m
    });
    index.get(&*text::lowercase(word)).copied()
}

pub fn is_verb_form(word: &str) -> bool {
    verb_entry(word).is_some()
}

pub fn pair_in(pairs: &[(&str, &str)], a: &str, b: &str) -> bool {
    let (a, b) = (text::lowercase(a), text::lowercase(b));
    pairs
        .iter()
        .any(|(x, y)| (*x == a && *y == b) || (*x == b && *y == a))
}
