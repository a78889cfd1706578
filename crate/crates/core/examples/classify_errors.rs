//! Error categories: free-text labels, the rule-based classifier, and the
//! count list format a profile renders to and parses from.

use peermirror::{classify_edit, extract_edits, normalize_label, parse_error_counts, Category, ErrorProfile};

fn main() {
    for label in ["Subject-verb agreement", "wrong TENSE!", "plural", "part of speech", "frobnication"] {
        println!("{label:>24} -> {}", normalize_label(label).as_str());
    }
    println!();

    for (a, b) in [
        ("He walk home.", "He walks home."),
        ("I buyed a book.", "I bought a book."),
        ("She is teacher.", "She is a teacher."),
        ("We arrived in monday.", "We arrived on monday."),
        ("It was realy cold.", "It was really cold."),
        ("I very like it.", "I like it very much."),
    ] {
        for e in extract_edits(a, b) {
            println!("{:<24} {:?} -> {:?}", classify_edit(&e).display_name(), e.original_text, e.corrected_text);
        }
    }

    let profile = ErrorProfile::from_counts([(Category::Spelling, 2), (Category::Preposition, 1), (Category::VerbTense, 3)]);
    let rendered = profile.render();
    println!("\n{rendered}");
    let parsed = parse_error_counts(&rendered);
    assert_eq!(parsed.profile, profile);
    assert_eq!(parsed.declared_total, Some(6));

    // Loose model output still parses; problems are reported, not fatal.
    let messy = "- Spelling mistakes: 2\n* preposition errors - 1\nVerb tense: three\nTotal corrections: 4";
    let parsed = parse_error_counts(messy);
    println!("{}", serde_json::to_string(&parsed.profile).unwrap());
    for issue in parsed.issues {
        println!("issue: {issue}");
    }
}
