//! The binary against the shipped replay fixtures and golden outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use peermirror::mock::TOPICS;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fx(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

fn golden(name: &str) -> String {
    fs::read_to_string(fixtures().join("golden").join(name)).unwrap()
}

/// The binary with a clean environment, in replay mode unless `args`
/// say otherwise.
fn peermirror(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_peermirror"));
    for var in ["API_KEY", "BASE_URL", "MODEL", "MODE", "FIXTURES"] {
        cmd.env_remove(format!("PEERMIRROR_{var}"));
    }
    cmd.env("PEERMIRROR_MODE", "replay")
        .env("PEERMIRROR_FIXTURES", fx("replay.jsonl"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn profile_matches_golden() {
    let o = peermirror(&["profile", "--in", &fx("corpus.jsonl")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
    assert_eq!(stdout(&o), golden("profiles.jsonl"));
}

#[test]
fn profile_missing_file_is_fatal() {
    let o = peermirror(&["profile", "--in", "/definitely/not/here.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not/here.jsonl"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn malformed_line_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mut text = fs::read_to_string(fixtures().join("corpus.jsonl")).unwrap();
    text.push_str("{\"id\": \"broken\", \n");
    fs::write(&path, text).unwrap();
    let o = peermirror(&["profile", "--in", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
    assert_eq!(stdout(&o), golden("profiles.jsonl"));
}

#[test]
fn replay_miss_fails_only_that_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mut text = fs::read_to_string(fixtures().join("corpus.jsonl")).unwrap();
    text.push_str("{\"id\":\"e99\",\"text\":\"This essay was never recorded.\"}\n");
    fs::write(&path, text).unwrap();
    let o = peermirror(&["profile", "--in", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("e99") && stderr(&o).contains("fixture not found"), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn generate_both_methods_match_golden() {
    for (method, file) in [("proposed", "proposed.jsonl"), ("comparison", "comparison.jsonl")] {
        let o = peermirror(&[
            "generate", "--method", method, "--in", &fx("corpus.jsonl"), "--topics", &fx("topics.jsonl"),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o), golden(file), "{method}");
    }
    for line in golden("proposed.jsonl").lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["accepted"], true);
        assert_eq!(v["target_profile"]["total"], v["achieved_profile"]["total"]);
    }
    for line in golden("comparison.jsonl").lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["target_profile"].is_null() && v["accepted"].is_null());
    }
}

#[test]
fn unknown_method_is_usage_error() {
    let o = peermirror(&["generate", "--method", "fancy", "--in", &fx("corpus.jsonl")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown method"));
}

#[test]
fn bad_flag_is_usage_error() {
    let o = peermirror(&["profile", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

fn evaluate(format: &str) -> Output {
    let g = |n: &str| fixtures().join("golden").join(n).to_string_lossy().into_owned();
    peermirror(&[
        "evaluate",
        "--user", &fx("corpus.jsonl"),
        "--proposed", &g("proposed.jsonl"),
        "--comparison", &g("comparison.jsonl"),
        "--format", format,
    ])
}

#[test]
fn evaluate_matches_golden_reports() {
    for (format, file) in [("json", "report.json"), ("csv", "report.csv"), ("markdown", "report.md")] {
        let o = evaluate(format);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o), golden(file), "{format}");
    }
    let md = golden("report.md");
    assert_eq!(md.matches("\n|---").count(), 4, "four tables");
    assert!(md.contains("is less than half"));
}

#[test]
fn evaluate_unknown_format() {
    let o = evaluate("yaml");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn evaluate_orphans_are_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("comparison.jsonl");
    let text = golden("comparison.jsonl");
    let first_three: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    fs::write(&path, first_three).unwrap();
    let g = fixtures().join("golden").join("proposed.jsonl");
    let o = peermirror(&[
        "evaluate",
        "--user", &fx("corpus.jsonl"),
        "--proposed", g.to_str().unwrap(),
        "--comparison", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("e04"), "{}", stderr(&o));
}

#[test]
fn session_with_sentinel_matches_golden() {
    let o = peermirror(&["session", "--topic", TOPICS[0], "--script", &fx("session_script.jsonl")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), golden("transcript.jsonl"));
    let step4: serde_json::Value = serde_json::from_str(stdout(&o).lines().nth(3).unwrap()).unwrap();
    assert_eq!(step4["role"], "LCAA");
    assert_ne!(step4["content"], "@pipeline");
    assert_eq!(step4["metadata"]["accepted"], true);
}

fn script(events: &[(u8, &str)]) -> tempfile::NamedTempFile {
    let file = tempfile::NamedTempFile::new().unwrap();
    let body: String = events
        .iter()
        .map(|(step, role)| format!("{{\"step\":{step},\"role\":\"{role}\",\"content\":\"turn {step}\"}}\n"))
        .collect();
    fs::write(file.path(), body).unwrap();
    file
}

const CANONICAL: [(u8, &str); 7] = [(1, "TAA"), (2, "USER"), (3, "TAA"), (4, "LCAA"), (5, "TAA"), (6, "USER"), (7, "TAA")];

#[test]
fn session_canonical_script_needs_no_backend() {
    let s = script(&CANONICAL);
    // Live mode with no key: fine, because nothing asks for generation.
    let o = peermirror(&["--mode", "live", "session", "--topic", "Any topic", "--script", s.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 7);
}

#[test]
fn session_out_of_order_names_the_step() {
    let mut events = CANONICAL;
    events.swap(2, 3);
    let s = script(&events);
    let o = peermirror(&["session", "--topic", "Any topic", "--script", s.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("expected step 3 (TAA), received step 4 (LCAA)"), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2, "transcript up to the violation");
}

#[test]
fn session_truncated_script_is_fatal() {
    let s = script(&CANONICAL[..5]);
    let o = peermirror(&["session", "--topic", "Any topic", "--script", s.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("before step 6"), "{}", stderr(&o));
}

#[test]
fn output_order_ignores_jobs() {
    let one = peermirror(&["--jobs", "1", "profile", "--in", &fx("corpus.jsonl")]);
    let four = peermirror(&["--jobs", "4", "profile", "--in", &fx("corpus.jsonl")]);
    assert_eq!(stdout(&one), stdout(&four));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.jsonl");
    let o = peermirror(&["profile", "--in", &fx("corpus.jsonl"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(out).unwrap(), golden("profiles.jsonl"));
}

#[test]
fn live_mode_without_key_is_a_configuration_error() {
    let o = peermirror(&["--mode", "live", "profile", "--in", &fx("corpus.jsonl")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("API key"), "{}", stderr(&o));
}

#[test]
fn precedence_flag_over_env_over_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("peermirror.toml");
    fs::write(&cfg, "mode = \"live\"\nmodel = \"from-file\"\n").unwrap();
    let c = cfg.to_str().unwrap();
    // The environment says replay, over the file's live.
    let o = peermirror(&["--config", c, "profile", "--in", &fx("corpus.jsonl")]);
    // The file's model changes every fingerprint, so replay misses.
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("fixture not found"));
    // A flag restores the recorded model.
    let o = peermirror(&["--config", c, "--model", "gpt-4o", "profile", "--in", &fx("corpus.jsonl")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // A flag beats the environment's mode.
    let o = peermirror(&["--config", c, "--mode", "live", "--model", "gpt-4o", "profile", "--in", &fx("corpus.jsonl")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("API key"));
}

#[test]
fn help_exits_zero() {
    let o = peermirror(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("profile"));
}
