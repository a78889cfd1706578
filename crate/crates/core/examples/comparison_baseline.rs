//! The one-shot baseline: ask the model to write like the learner, with no
//! profiling and no verification, then profile what came back.

use peermirror::mock::{MockBackend, TOPICS};
use peermirror::pipeline::Pipeline;

const LEARNER: &str = "My favorite movie is Harry Potter. It is about a boy who learn that he is a wizard. \
He go to a magic school and make two good friend.";

fn main() -> anyhow::Result<()> {
    let pipeline = Pipeline::new(MockBackend::new());
    let essay = pipeline.generate_comparison(LEARNER, TOPICS[1])?;
    println!("{essay}\n");
    let profile = pipeline.extract_profile(&essay)?.profile;
    println!("errors found in the baseline essay: {}", profile.total());
    Ok(())
}
