//! End-to-end tests of the `linguinec` and `linguine-fuzz` binaries.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const AVERAGE: &str = include_str!("../corpus/average.ling");
const STATS: &str = include_str!("../corpus/stats_report.ling");
const STATS_OUT: &str = include_str!("../corpus/stats_report.out");

fn linguinec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linguinec"))
}

fn write(dir: &Path, name: &str, source: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, source).unwrap();
    path
}

fn run(cmd: &mut Command) -> (Option<i32>, String, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().unwrap();
    (
        status.code(),
        String::from_utf8_lossy(&stdout).into_owned(),
        String::from_utf8_lossy(&stderr).into_owned(),
    )
}

#[test]
fn average_runs_silently() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "average.ling", AVERAGE);
    let (code, out, err) = run(linguinec().arg(&path));
    assert_eq!(code, Some(0), "{err}");
    assert_eq!(out, "");
    assert!(dir.path().join("average.py").exists());
}

#[test]
fn default_mode_executes_python() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "stats.ling", STATS);
    let (code, out, _) = run(linguinec().arg(&path));
    assert_eq!(code, Some(0));
    assert_eq!(out, STATS_OUT);
    let (code, out, _) = run(linguinec().arg("--interpret").arg(&path));
    assert_eq!(code, Some(0));
    assert_eq!(out, STATS_OUT);
}

#[test]
fn orphan_exits_1_naming_line_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "orphan.ling", &format!("Print it.\n{AVERAGE}"));
    let (code, out, err) = run(linguinec().arg(&path));
    assert_eq!(code, Some(1));
    assert_eq!(out, "");
    assert!(err.starts_with("error[pronoun-undefined]"), "{err}");
    assert!(err.contains("orphan.ling:1:7"), "{err}");
    assert!(err.contains("referent trace: none bound"), "{err}");
    assert!(!dir.path().join("orphan.py").exists());
}

#[test]
fn target_py_writes_without_running() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "prog.ling", "Print 2 plus 3.\n");
    let (code, out, _) = run(linguinec().args(["-t", "py"]).arg(&path));
    assert_eq!(code, Some(0));
    assert_eq!(out, "");
    let py = std::fs::read_to_string(dir.path().join("prog.py")).unwrap();
    assert!(py.starts_with("# generated by linguinec\n"), "{py}");
    assert!(py.contains("print(2 + 3)"), "{py}");
}

#[test]
fn annotate_adds_line_comments() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "prog.ling", "Let x be 1.\nPrint x.\n");
    run(linguinec().args(["-t", "py", "--annotate"]).arg(&path));
    let py = std::fs::read_to_string(dir.path().join("prog.py")).unwrap();
    assert!(py.contains("  # line 2"), "{py}");
}

#[test]
fn exit_codes() {
    let (code, _, err) = run(linguinec().arg("/definitely/not/here.ling"));
    assert_eq!(code, Some(2), "{err}");
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p.ling", "Print 1.\n");
    let (code, _, err) = run(linguinec().args(["-t", "llvm"]).arg(&path));
    assert_eq!(code, Some(3), "{err}");
    let path = write(dir.path(), "bad.ling", "Let x be 1 plus \"a\".\n");
    let (code, _, err) = run(linguinec().arg(&path));
    assert_eq!(code, Some(1));
    assert!(err.starts_with("error[type]"), "{err}");
    let path = write(
        dir.path(),
        "div.ling",
        "Let x be 0.\nPrint 1 divided by x.\n",
    );
    let (code, _, err) = run(linguinec().arg("--interpret").arg(&path));
    assert_eq!(code, Some(1));
    assert!(err.starts_with("error[runtime]"), "{err}");
}

#[test]
fn emit_flags_dump_and_stop() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "average.ling", AVERAGE);
    for (flag, needle) in [
        ("--emit-tokens", "KEYWORD\tLet"),
        ("--emit-ast", "average"),
        ("--emit-core", "(reduce plus 0"),
        ("--emit-types", "average : Int"),
        ("--emit-ir", "RELOP greater-than average_1 10"),
        ("--emit-refs", "it -> average"),
    ] {
        let (code, out, err) = run(linguinec().arg(flag).arg(&path));
        assert_eq!(code, Some(0), "{flag}: {err}");
        assert!(out.contains(needle), "{flag}: {out}");
    }
    assert!(!dir.path().join("average.py").exists());
}

#[test]
fn time_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "stats.ling", STATS);
    let (code, _, err) = run(linguinec().args(["--time", "-t", "py"]).arg(&path));
    assert_eq!(code, Some(0));
    let stages: Vec<&str> = err
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(
        stages,
        ["lex", "parse", "desugar", "typeck", "ssa", "refs", "codegen", "total"]
    );
}

fn repl(input: &str) -> (Option<i32>, String, String) {
    let mut child = linguinec()
        .arg("-i")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    let Output {
        status,
        stdout,
        stderr,
    } = child.wait_with_output().unwrap();
    (
        status.code(),
        String::from_utf8_lossy(&stdout).into_owned(),
        String::from_utf8_lossy(&stderr).into_owned(),
    )
}

#[test]
fn repl_session() {
    let (code, out, err) = repl(
        "Let x be 4.\nPrint it plus 1.\nPrint them.\nFor each n in [1, 2]:\nPrint n.\nEnd for.\n",
    );
    assert_eq!(code, Some(0), "{err}");
    assert_eq!(out, "5\n4\n1\n2\n");
    assert_eq!(err, "");
}

#[test]
fn repl_rejection_keeps_state() {
    let (code, out, err) = repl("Print it.\nLet y be 2.\nPrint y plus \"s\".\nPrint y.\n");
    assert_eq!(code, Some(0));
    assert!(err.contains("error[pronoun-undefined]"), "{err}");
    assert!(err.contains("error[type]"), "{err}");
    assert_eq!(out, "2\n");
}

#[test]
fn repl_unfinished_block_at_eof() {
    let (code, _, err) = repl("If true:\nPrint 1.\n");
    assert_eq!(code, Some(1));
    assert!(err.contains("error[parse]"), "{err}");
}

#[test]
fn fuzz_cli_agrees_and_detects_flipped_plus() {
    let dir = tempfile::tempdir().unwrap();
    let fuzz = || {
        let mut c = Command::new(env!("CARGO_BIN_EXE_linguine-fuzz"));
        c.arg("--out-dir").arg(dir.path());
        c
    };
    let (code, out, err) = run(fuzz().args(["--count", "20", "--seed-base", "7000"]));
    assert_eq!(code, Some(0), "{err}");
    assert!(out.starts_with("20/20 programs agree"), "{out}");

    let (code, out, _) = run(fuzz().arg("--faults"));
    assert_eq!(code, Some(0));
    assert!(out.contains("27/27 faults caught"), "{out}");

    // a generated program that uses plus outside a loop counter
    let (code, _, err) = run(fuzz().args(["--count", "1", "--seed-base", "13", "--flip-plus"]));
    assert_eq!(code, Some(1));
    assert!(err.contains("mismatch at seed 13"), "{err}");
    let repro = std::fs::read_to_string(dir.path().join("13.ling")).unwrap();
    assert!(
        repro.starts_with("# differential mismatch, seed 13\n"),
        "{repro}"
    );
}
