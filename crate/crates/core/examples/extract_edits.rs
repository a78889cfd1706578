//! Derive the edit script between an essay and its correction, check it
//! against a model-style change list, and categorize every edit.

use peermirror::edits::{apply_edits, render_change_list};
use peermirror::taxonomy::{categorize, profile_from_edits};
use peermirror::{extract_edits, parse_change_list, reconcile, text};

const ORIGINAL: &str = "Yesterday I go to the park with my friend and we plays soccer in afternoon.";
const CORRECTED: &str = "Yesterday I went to the park with my friend, and we played soccer in the afternoon.";

const CHANGE_LIST: &str = "\
1. 'go' → 'went' (verb tense)
2. 'friend and' → 'friend, and' (punctuation)
3. 'plays' → 'played' (verb tense)
4. 'in afternoon' → 'in the afternoon' (article)";

fn main() {
    let edits = extract_edits(ORIGINAL, CORRECTED);
    for e in &edits {
        println!("{:?} {:?} -> {:?}", e.kind, e.original_text, e.corrected_text);
    }

    // The script rebuilds the corrected text exactly.
    let (to, tc) = (text::tokenize(ORIGINAL), text::tokenize(CORRECTED));
    let rebuilt: Vec<&str> = apply_edits(&to, &tc, &edits).iter().map(|t| t.surface.as_str()).collect();
    assert_eq!(rebuilt, tc.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>());

    let list = parse_change_list(CHANGE_LIST);
    let rec = reconcile(&edits, &list.items);
    println!(
        "\n{} matched, {} edits without an item, {} items without an edit",
        rec.matched.len(),
        rec.unmatched_edits.len(),
        rec.unmatched_items.len()
    );

    let hints = rec.hints(&list.items, edits.len());
    println!();
    for e in categorize(&edits, &hints) {
        println!("{:<28} {:?} -> {:?}", e.category.unwrap().display_name(), e.original_text, e.corrected_text);
    }
    println!("\n{}", profile_from_edits(&edits, &hints).render());
    println!("Rendered back as a change list:\n{}", render_change_list(&list.items));
}
