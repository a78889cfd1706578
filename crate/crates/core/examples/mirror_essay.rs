//! Profile a learner essay and generate a peer essay with the same errors,
//! using the offline mock model.
//!
//!     cargo run --example mirror_essay

use peermirror::mock::{MockBackend, TOPICS};
use peermirror::pipeline::Pipeline;

const LEARNER: &str = "I would like to visit Italy because I love it's history and food. \
When I was child, my grandmother showed me many picture of Rome. \
She told me that the old buildings is very beautiful at night.";
const CLEAN: &str = "I would like to visit Italy because I love its history and food. \
When I was a child, my grandmother showed me many pictures of Rome. \
She told me that the old buildings are very beautiful at night.";

fn main() -> anyhow::Result<()> {
    // The mock corrects by snapping to a known clean text.
    let pipeline = Pipeline::new(MockBackend::new().with_references([CLEAN]));

    let extraction = pipeline.extract_profile(LEARNER)?;
    println!("learner profile:\n{}", extraction.profile.render());

    let result = pipeline.generate_mirrored(LEARNER, TOPICS[0])?;
    println!(
        "\naccepted: {} after {} attempt(s); target {}, achieved {}",
        result.accepted,
        result.attempts.len(),
        result.target_profile.total(),
        result.achieved_profile.total()
    );
    println!("\n{}", result.text);
    if !result.audit.category_delta.is_empty() {
        println!("\nper-category difference: {:?}", result.audit.category_delta);
    }
    Ok(())
}
