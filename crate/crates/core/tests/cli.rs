use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn topocyl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topocyl")).args(args).output().unwrap()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("topocyl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn passing_problem_exits_zero() {
    let out = topocyl(&[problem("orbits.cyl").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("== orbits (line 9): PASS"), "{text}");
    assert!(text.contains("orbits 3"), "{text}");
}

#[test]
fn literal_reading_exits_one() {
    let out = topocyl(&[problem("sierpinski_literal.cyl").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn parse_error_exits_two_with_line() {
    let path = scratch("bad.cyl", "[base]\npoints = 2\n\n[orbits]\ngenerators = nowhere\n");
    let out = topocyl(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 5"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn support_cap_flag_applies_while_parsing() {
    let out = topocyl(&[problem("omit.cyl").to_str().unwrap(), "--support-cap", "8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("support cap exceeded"));
}

#[test]
fn json_is_one_document_per_command() {
    let out = topocyl(&[problem("interpolate.cyl").to_str().unwrap(), "--json", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let docs: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(docs.len(), 2);
    assert_eq!(docs[0]["command"], "interpolate");
    assert_eq!(docs[0]["seed"], 3);
    assert_eq!(docs[0]["interpolant"]["term"], "x");
}

#[test]
fn timing_only_changes_the_human_report() {
    let file = problem("orbits.cyl");
    let plain = topocyl(&[file.to_str().unwrap()]);
    let timed = topocyl(&[file.to_str().unwrap(), "--timing"]);
    let (plain, timed) = (
        String::from_utf8(plain.stdout).unwrap(),
        String::from_utf8(timed.stdout).unwrap(),
    );
    assert_ne!(plain, timed);
    assert!(timed.contains("s]"));
}
