//! Learner error profiling and error-mirroring essay generation.
//!
//! The crate extracts a grammatical-error profile from a learner essay,
//! generates a companion essay that contains the same number and kinds of
//! errors, and measures how closely generated essays track the learner
//! against a one-shot "imitate this writer" baseline.

pub mod cli;
pub mod client;
pub mod edits;
pub mod evaluate;
pub mod lexicon;
pub mod mock;
pub mod pipeline;
pub mod prompts;
pub mod session;
pub mod taxonomy;
pub mod text;

pub use edits::{align, extract_edits, parse_change_list, reconcile, ChangeItem, Edit, EditKind};
pub use taxonomy::{classify_edit, normalize_label, parse_error_counts, Category, ErrorProfile};
