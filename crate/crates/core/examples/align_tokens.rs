//! Tokenize two sentences and print their minimum-cost alignment.
//!
//!     cargo run --example align_tokens -- "He go to school yesterday." "He went to school yesterday."

use peermirror::edits::AlignOp;
use peermirror::text;

fn main() {
    let mut args = std::env::args().skip(1);
    let a = args.next().unwrap_or_else(|| "She have two cat and a dog.".into());
    let b = args.next().unwrap_or_else(|| "She has two cats and a dog.".into());
    // Tokens carry their spans, so align on the surfaces.
    let surfaces = |s: &str| -> Vec<String> { text::tokenize(s).into_iter().map(|t| t.surface).collect() };
    let (ta, tb) = (surfaces(&a), surfaces(&b));
    let alignment = peermirror::align(&ta, &tb);
    println!("distance {}", alignment.cost);
    for op in alignment.ops {
        match op {
            AlignOp::Match { a, .. } => println!("  = {}", ta[a]),
            AlignOp::Substitute { a, b } => println!("  ~ {} -> {}", ta[a], tb[b]),
            AlignOp::Delete { a } => println!("  - {}", ta[a]),
            AlignOp::Insert { b } => println!("  + {}", tb[b]),
        }
    }
}
