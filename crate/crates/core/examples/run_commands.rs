//! Drive the command layer from code: profile, generate and evaluate the
//! shipped corpus in mock mode, writing records to a temporary directory.

use std::path::PathBuf;

use peermirror::cli::{self, Command, Config, GlobalArgs, EXIT_OK};

fn main() -> anyhow::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = tempfile::tempdir()?;
    let flags = GlobalArgs {
        mode: Some("mock".into()),
        references: Some(fixtures.join("references.jsonl")),
        ..GlobalArgs::default()
    };
    // No file and no environment: only the flags above apply.
    let config = Config::resolve(None, |_| None, &flags)?;

    let generate = |method: &str| Command::Generate {
        method: method.into(),
        input: fixtures.join("corpus.jsonl"),
        topics: None,
        out: Some(out.path().join(format!("{method}.jsonl"))),
    };
    for cmd in [
        Command::Profile { input: fixtures.join("corpus.jsonl"), out: Some(out.path().join("profiles.jsonl")) },
        generate("proposed"),
        generate("comparison"),
    ] {
        assert_eq!(cli::execute(&config, cmd), EXIT_OK);
    }
    let code = cli::execute(
        &config,
        Command::Evaluate {
            user: fixtures.join("corpus.jsonl"),
            proposed: out.path().join("proposed.jsonl"),
            comparison: out.path().join("comparison.jsonl"),
            report: None,
            format: "markdown".into(),
            secondary: false,
        },
    );
    std::process::exit(code);
}
