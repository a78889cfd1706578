//! Rebuilds `fixtures/replay.jsonl` and the golden outputs.
//!
//! Every command runs once against the mock backend (with the corpus's
//! clean references) behind a recorder. The recorded exchanges become the
//! replay store, and the commands are then rerun in replay mode to write
//! `fixtures/golden/`.
//!
//!     cargo run --example record_fixtures

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use peermirror::cli::{self, Command, Config, Mode, EXIT_OK};
use peermirror::client::{ChatBackend, Recorder};
use peermirror::mock::{MockBackend, TOPICS};

fn commands(fixtures: &Path, out: &Path) -> Vec<(&'static str, Command)> {
    let f = |name: &str| fixtures.join(name);
    let o = |name: &str| out.join(name);
    let report = |format: &str, name: &str| Command::Evaluate {
        user: f("corpus.jsonl"),
        proposed: o("proposed.jsonl"),
        comparison: o("comparison.jsonl"),
        report: Some(o(name)),
        format: format.into(),
        secondary: false,
    };
    vec![
        ("profile", Command::Profile { input: f("corpus.jsonl"), out: Some(o("profiles.jsonl")) }),
        (
            "generate proposed",
            Command::Generate {
                method: "proposed".into(),
                input: f("corpus.jsonl"),
                topics: Some(f("topics.jsonl")),
                out: Some(o("proposed.jsonl")),
            },
        ),
        (
            "generate comparison",
            Command::Generate {
                method: "comparison".into(),
                input: f("corpus.jsonl"),
                topics: Some(f("topics.jsonl")),
                out: Some(o("comparison.jsonl")),
            },
        ),
        ("evaluate json", report("json", "report.json")),
        ("evaluate csv", report("csv", "report.csv")),
        ("evaluate markdown", report("markdown", "report.md")),
        (
            "session",
            Command::Session {
                topic: TOPICS[0].into(),
                script: f("session_script.jsonl"),
                transcript: Some(o("transcript.jsonl")),
            },
        ),
    ]
}

fn run_all(config: &Config, fixtures: &Path, out: &Path, backend: Option<Arc<dyn ChatBackend>>) {
    for (name, cmd) in commands(fixtures, out) {
        let code = cli::execute_with(config, cmd, backend.clone());
        assert_eq!(code, EXIT_OK, "{name} exited with {code}");
    }
}

fn main() -> anyhow::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let golden = fixtures.join("golden");
    std::fs::create_dir_all(&golden)?;

    let (references, _) = cli::read_records::<cli::CorpusRecord>(&fixtures.join("references.jsonl"))?;
    let mock = MockBackend::new().with_references(references.into_iter().map(|r| r.text));
    let recorder = Arc::new(Recorder::in_memory(mock));
    let scratch = tempfile::tempdir()?;
    let config = Config::default();
    run_all(&config, &fixtures, scratch.path(), Some(recorder.clone()));

    // The mock answers a request the same way every time, so one record per
    // fingerprint is enough; sorting keeps the file diffable.
    let unique: BTreeMap<String, _> = recorder
        .records()
        .into_iter()
        .map(|r| (r.fingerprint.clone(), r))
        .collect();
    let store = fixtures.join("replay.jsonl");
    let records: Vec<_> = unique.into_values().collect();
    cli::write_records(&mut std::fs::File::create(&store)?, &records)?;
    println!("{} exchanges -> {}", records.len(), store.display());

    let replay = Config {
        mode: Mode::Replay,
        fixture_path: Some(store),
        ..Config::default()
    };
    run_all(&replay, &fixtures, &golden, None);
    println!("golden outputs -> {}", golden.display());
    Ok(())
}
