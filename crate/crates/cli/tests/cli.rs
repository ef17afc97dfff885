use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stoptime"));
    c.env_remove("STOPTIME_DEPTH_MAX");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("trace is utf-8")
}

#[test]
fn verify_all_is_deterministic_per_seed() {
    let first = run(&["verify-all", "--seed", "9", "--quick"]);
    let second = run(&["verify-all", "--seed", "9", "--quick"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).lines().count() >= 7);
}

#[test]
fn color_game_rejects_a_zero_budget() {
    let out = run(&["color-game", "--k", "0", "--depth", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn color_game_replays_a_marks_file() {
    let marks = fixture("nested_marks.txt");
    let ok = run(&["color-game", "--k", "4", "--depth", "8", "--marks", marks.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("\"ok\":true"));

    // The same four nested marks exceed budget 3.
    let narrow =
        run(&["color-game", "--k", "3", "--depth", "8", "--marks", marks.to_str().unwrap()]);
    assert_eq!(narrow.status.code(), Some(2));
}

#[test]
fn color_game_episodes_are_seed_stable() {
    let args = ["color-game", "--k", "4", "--depth", "10", "--episodes", "5", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn beat_game_rejects_unknown_opponents() {
    let out = run(&["beat-game", "--team", "alien"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn beat_game_depth_cap_is_env_adjustable() {
    // Team of three wants depth 20, above the default cap of 16.
    let blocked = run(&["beat-game", "--team", "replicator,sniper,silent"]);
    assert_eq!(blocked.status.code(), Some(2));

    let mut raised = bin();
    raised.args(["beat-game", "--team", "replicator,sniper,silent", "--seed", "5"]);
    raised.env("STOPTIME_DEPTH_MAX", "32");
    let out = raised.output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"outcome\":\"won-3\""));
}

#[test]
fn depth_cap_env_must_be_a_count() {
    let mut cmd = bin();
    cmd.args(["color-game", "--k", "2", "--depth", "6"]);
    cmd.env("STOPTIME_DEPTH_MAX", "plenty");
    assert_eq!(cmd.output().unwrap().status.code(), Some(2));
}

#[test]
fn alloc_game_wants_a_power_of_two_budget() {
    let out = run(&["alloc-game", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alloc_game_replays_stream_files() {
    let good = fixture("good_stream.tsv");
    let out = run(&["alloc-game", "--n", "2", "--depth", "8", "--stream", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"mode-valid\":true"));

    let bad = fixture("overbudget_stream.tsv");
    let out = run(&["alloc-game", "--n", "2", "--depth", "8", "--stream", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alloc_adversary_validates_its_parameters() {
    assert_eq!(run(&["alloc-adversary", "--n", "1", "--assigner", "silent"]).status.code(), Some(2));
    assert_eq!(run(&["alloc-adversary", "--n", "2", "--assigner", "oracle"]).status.code(), Some(2));
    assert_eq!(
        run(&["alloc-adversary", "--n", "2", "--c", "0", "--assigner", "silent"]).status.code(),
        Some(2)
    );
}

#[test]
fn adversary_pigeonhole_catches_the_naive_assigner() {
    let out = run(&["alloc-adversary", "--n", "2", "--c", "2", "--assigner", "always-serve"]);
    assert_eq!(out.status.code(), Some(0));
    let trace = stdout(&out);
    assert!(trace.contains("\"event\":\"collision\""));
    assert!(trace.contains("assigner-contradiction"));
}

#[test]
fn oracle_flags_an_invalid_mode() {
    let bad = fixture("invalid_mode.tsv");
    let out = run(&["oracle", "--input", bad.to_str().unwrap(), "--depth", "4", "--span", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("\"cardinality-ok\":false"));

    let good = fixture("good_mode.tsv");
    let out = run(&["oracle", "--input", good.to_str().unwrap(), "--depth", "4", "--span", "2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn convert_round_trips_length_modes() {
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let len_path = tmp.join("good_mode_as_length.tsv");
    let good = fixture("good_mode.tsv");
    let out = bin()
        .args(["--out", len_path.to_str().unwrap()])
        .args(["convert", "to-length", "--input", good.to_str().unwrap(), "--depth", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());

    let back = run(&["convert", "from-length", "--input", len_path.to_str().unwrap(), "--depth", "4"]);
    assert_eq!(back.status.code(), Some(0));

    let bad = fixture("bad_length_mode.tsv");
    let out = run(&["convert", "from-length", "--input", bad.to_str().unwrap(), "--depth", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convert_script_machine_round_trips() {
    let good = fixture("good_script.txt");
    let out = run(&["convert", "script-machine", "--input", good.to_str().unwrap(), "--depth", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for emission in ["01", "10", "11"] {
        assert!(text.lines().any(|l| l == emission), "missing {emission} in {text}");
    }

    let bad = fixture("bad_script.txt");
    let out = run(&["convert", "script-machine", "--input", bad.to_str().unwrap(), "--depth", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convert_rejects_malformed_mode_files() {
    let script = fixture("good_script.txt"); // one column, not a triple file
    let out = run(&["convert", "trim", "--input", script.to_str().unwrap(), "--depth", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn machine_enumeration_is_depth_capped() {
    let out = run(&["convert", "machine-script", "--machine", "halt-on-ones:1", "--depth", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "1\n01\n001\n");

    let out = run(&["convert", "machine-script", "--machine", "flip-flop:9", "--depth", "3"]);
    assert_eq!(out.status.code(), Some(2));
}
