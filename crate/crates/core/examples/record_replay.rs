//! Record model exchanges to a fixture store and serve them back offline.
//! A request that was never recorded fails instead of reaching a network.

use peermirror::client::{ChatBackend, CompletionRequest, Message, Recorder, ReplayBackend, Retry, RetryPolicy};
use peermirror::mock::{MockBackend, TOPICS};
use peermirror::pipeline::Pipeline;
use std::time::Duration;

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let store = dir.path().join("replay.jsonl");

    let recorder = Recorder::to_file(MockBackend::new(), &store)?;
    let live = Pipeline::new(recorder).generate_comparison("I like rain.", TOPICS[2])?;

    let replay = ReplayBackend::load(&store)?;
    println!("{} recorded exchange(s)", replay.len());
    let again = Pipeline::new(replay).generate_comparison("I like rain.", TOPICS[2])?;
    assert_eq!(live, again);
    println!("replayed the same essay offline");

    let replay = ReplayBackend::load(&store)?;
    let unknown = CompletionRequest::new("gpt-4o", vec![Message::user("never asked")], 0.0, 16)?;
    println!("unrecorded request: {}", replay.complete(&unknown).unwrap_err());

    // Transient failures are retried with exponential backoff.
    let policy = RetryPolicy { retries: 3, base_delay: Duration::from_millis(100) };
    for r in 0..policy.retries {
        println!("retry {} waits {:?}", r + 1, policy.delay(r));
    }
    let _retrying = Retry::new(MockBackend::new(), policy);
    Ok(())
}
