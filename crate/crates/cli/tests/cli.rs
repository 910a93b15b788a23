use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(format!("{name}.events.jsonl"))
}

fn analyze(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_analyze")).args(args).env_remove("RUST_BACKTRACE").output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn stats_json_matches_counts_fixture() {
    let p = fixture("p06_counts");
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&analyze(&["--json", "stats", p.to_str().unwrap()]))).unwrap();
    assert_eq!(v["notes_created"], 55);
    assert_eq!(v["notes_merged"], 27);
    assert_eq!(v["tip_responses"], 24);
    assert_eq!(v["duration"], 922_000);
}

#[test]
fn classify_both_activities() {
    let p = fixture("p06_counts");
    let p = p.to_str().unwrap();
    assert_eq!(stdout(&analyze(&["classify", p])).trim(), "HeavyIntegrator");
    assert_eq!(stdout(&analyze(&["classify", p, "--activity", "recap"])).trim(), "IterativeRecapUser");
}

#[test]
fn replay_reports_identical_and_divergence() {
    let p = fixture("think_aloud_3min");
    assert!(stdout(&analyze(&["replay", p.to_str().unwrap()])).starts_with("identical"));

    let dir = tempfile::tempdir().unwrap();
    let mut text = std::fs::read_to_string(&p).unwrap();
    text = text.replacen("\"kind\":\"note_created\"", "\"kind\":\"note_created\",\"x\":1", 1);
    let tampered = dir.path().join("tampered.events.jsonl");
    std::fs::write(&tampered, &text).unwrap();
    let out = analyze(&["replay", tampered.to_str().unwrap()]);
    assert!(!out.status.success());
    let line = text.lines().position(|l| l.contains("\"x\":1")).unwrap() + 1;
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("diverges at line {line}")));

    let lines: Vec<&str> = text.lines().collect();
    let broken = dir.path().join("broken.events.jsonl");
    std::fs::write(&broken, format!("{}\n{}", lines[0], lines[1])).unwrap();
    let out = analyze(&["replay", broken.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn timeline_csv_and_wpm() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let p = fixture("think_aloud_3min");
    stdout(&analyze(&["timeline", p.to_str().unwrap(), "-o", csv.to_str().unwrap()]));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,event_kind,detail\n"));
    assert!(text.contains(",note_created,"));

    let b = fixture("baseline_2min");
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&analyze(&["--json", "wpm", b.to_str().unwrap()]))).unwrap();
    assert!(v["wpm"].as_f64().unwrap() > 0.0);
}

#[test]
fn synth_then_replay_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("s.events.jsonl");
    let l = log.to_str().unwrap();
    stdout(&analyze(&["synth", "--seed", "3", "--duration-ms", "60000", "-o", l]));
    assert!(stdout(&analyze(&["replay", l])).starts_with("identical"));
    stdout(&analyze(&["synth", "--seed", "3", "--duration-ms", "60000", "--baseline", "-o", l]));
    let v: serde_json::Value = serde_json::from_str(&stdout(&analyze(&["--json", "stats", l]))).unwrap();
    assert_eq!(v["notes_created"], 0);
}
