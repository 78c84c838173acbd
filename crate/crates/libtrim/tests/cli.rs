//! Drives the installed binary end to end: exit codes, summary lines, and
//! the stability of machine-readable output.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_libtrim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn binary")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

/// The corpus written to a scratch file the binary can read.
fn corpus_file(dir: &Path) -> PathBuf {
    let path = dir.join("midilib.mir");
    std::fs::write(&path, libtrim::CORPUS_SOURCE).expect("write corpus");
    path
}

#[test]
fn check_accepts_every_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let mut paths = vec![corpus];
    for (name, _) in common::all_fixtures() {
        if name != "midilib" {
            paths.push(common::fixture_path(&name));
        }
    }
    for path in paths {
        let out = run(&["check", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), stderr_of(&out));
        assert_eq!(stdout_of(&out), "ok\n");
    }
}

#[test]
fn check_reports_syntax_errors_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.mir");
    std::fs::write(&path, "app fn main() {\nentry:\n  const x 1\n  ret\n}\n").unwrap();
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("expected"), "stderr: {}", stderr_of(&out));
}

#[test]
fn missing_files_exit_2() {
    let out = run(&["check", "/no/such/file.mir"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["census", "/no/such/file.mir"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("census"));
    let out = run(&["debloat"]);
    assert_eq!(out.status.code(), Some(2), "missing required module argument");
}

#[test]
fn census_summary_lines_pin_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let path = corpus.to_str().unwrap();

    let out = run(&["census", path]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.ends_with("fields=44 app_read=9 resultless=20\n"), "got:\n{text}");
    assert!(text.contains("Msg.iType reads lib=1 app=1 writes lib=1 app=0"));
    assert!(text.contains("scalar lastWheel reads lib=0 app=0 writes lib=1 app=0"));

    let out = run(&["census", path, "--identity", "offset"]);
    let text = stdout_of(&out);
    assert!(text.ends_with("fields=16 app_read=6 resultless=4\n"), "got:\n{text}");
    assert!(text.contains("Msg+16:1 "));
}

#[test]
fn variants_summary_pins_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let out = run(&["variants", corpus.to_str().unwrap(), "--tag", "msg.iType"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("tag=Msg.iType"));
    assert!(text.contains("unused: 160 176 192 208 224 240"));
    assert!(text.ends_with("produced=9 consumed=3 unused=6\n"), "got:\n{text}");
}

#[test]
fn debloat_pins_the_ratio_and_emits_a_checkable_module() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let trimmed = dir.path().join("trimmed.mir");
    let report = dir.path().join("report.json");

    let out = run(&[
        "debloat",
        corpus.to_str().unwrap(),
        "--tool",
        "both",
        "--tag",
        "msg.iType",
        "--out",
        trimmed.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "tool=combined removed=82 library_total=189 ratio=0.43\n");

    let check = run(&["check", trimmed.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0), "trimmed module must stay well-formed");

    let json = run(&[
        "debloat",
        corpus.to_str().unwrap(),
        "--tool",
        "both",
        "--tag",
        "msg.iType",
        "--json",
    ]);
    let report_text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(report_text, stdout_of(&json), "--report file equals --json output");
    assert!(report_text.starts_with("{\n"));
    assert!(report_text.ends_with("}\n"));
}

#[test]
fn debloat_tool_b_infers_the_tag_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let out = run(&["debloat", corpus.to_str().unwrap(), "--tool", "b"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stderr_of(&out).contains("note: inferred --tag Msg.iType"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn bad_tags_exit_1_with_a_reason() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let out = run(&["variants", corpus.to_str().unwrap(), "--tag", "msg.zzz"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("does not reach a primitive field"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn verify_accepts_identity_and_flags_real_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let path = corpus.to_str().unwrap();

    let out = run(&["verify", path, path]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out), "equivalent runs=10 seed=42\n");

    let other = common::fixture_path("min_output");
    let out = run(&["verify", path, other.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).starts_with("divergence trace="), "got: {}", stdout_of(&out));
}

#[test]
fn profile_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let path = corpus.to_str().unwrap();
    let a = run(&["profile", path]);
    let b = run(&["profile", path]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout_of(&a), stdout_of(&b));
    let text = stdout_of(&a);
    assert!(text.contains("writes unremovable="), "got:\n{text}");
    assert!(text.ends_with("runs=10 seed=42\n"));
}

#[test]
fn json_documents_are_byte_stable_and_key_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let path = corpus.to_str().unwrap();
    let a = stdout_of(&run(&["census", path, "--json"]));
    let b = stdout_of(&run(&["census", path, "--json"]));
    assert_eq!(a, b);
    let command = a.find("\"command\"").expect("command key");
    let identity = a.find("\"identity\"").expect("identity key");
    let digest = a.find("\"module_digest\"").expect("digest key");
    let payload = a.find("\"payload\"").expect("payload key");
    assert!(command < identity && identity < digest && digest < payload);
}
