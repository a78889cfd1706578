//! The seven-step exchange between teacher agent, learner and companion,
//! with the companion's essay generated from the learner's answer.

use peermirror::mock::{MockBackend, TOPICS};
use peermirror::pipeline::Pipeline;
use peermirror::session::{Event, Session, SessionStep, Speaker, PIPELINE_SENTINEL};

fn main() -> anyhow::Result<()> {
    let answer = "I prefer outdoor activities because they make me feel free. I walks with my dog every weekend.";
    let corrected = "I prefer outdoor activities because they make me feel free. I walk with my dog every weekend.";
    let pipeline = Pipeline::new(MockBackend::new().with_references([corrected]));
    let mut session = Session::new(TOPICS[2])?;

    // Skipping ahead is rejected and leaves the session where it was.
    let err = session.advance(Event::new(2, Speaker::User, "too early")).unwrap_err();
    println!("rejected: {err}");

    let contents = [
        TOPICS[2],
        answer,
        "Thanks. Here is an essay from your partner.",
        PIPELINE_SENTINEL,
        "Please point out the mistakes you can find.",
        "The partner wrote 'I prefers', which should be 'I prefer'.",
        "Good work.",
    ];
    for (step, content) in SessionStep::ALL.iter().zip(contents) {
        session.advance_with(Event::new(step.ordinal(), step.speaker(), content), Some(&pipeline))?;
    }
    assert!(session.is_completed());
    for entry in session.transcript() {
        let text: String = entry.content.chars().take(70).collect();
        println!("{} {:<4} {text}", entry.step, entry.role.as_str());
    }
    if let Some(meta) = &session.transcript()[3].metadata {
        println!("\ncompanion essay: {} of {} target errors", meta.achieved_total, meta.target_total);
    }
    Ok(())
}
