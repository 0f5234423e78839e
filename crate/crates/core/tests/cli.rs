use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SL2: &str = r#"{"n": 2, "A": [[1, 0], [0, -1]], "B": [[[0, -1], [1, 0]]], "range": {"lo": [-0.3], "hi": [0.3]}, "resolution": 120}"#;
const DIAGONAL_SL3: &str = r#"{"n": 3, "A": [[2, 0, 0], [0, 0, 0], [0, 0, -2]], "B": [[[1, 0, 0], [0, -1, 0], [0, 0, 0]]], "range": {"lo": [-0.2], "hi": [0.2]}, "resolution": 200}"#;

fn flagcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flagcs")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn analyze_writes_report_and_cells() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "sl2.json", SL2);
    let (json, csv) = (dir.path().join("report.json"), dir.path().join("cells.csv"));
    let out =
        flagcs(&["analyze", "--config", &config, "--out", json.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.starts_with("120 cells"), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS ")).count() >= 7);

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["control_sets"].as_array().unwrap().len(), 2);
    assert_eq!(report["checks"].as_array().unwrap().len(), 8);

    let csv = fs::read_to_string(&csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("cell,x0,x1,x2,x3,control_set,chain_set"));
    assert_eq!(lines.count(), 120);
}

#[test]
fn check_subcommand_runs_only_listed_checks() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "sl2.json", SL2);
    let out = flagcs(&["check", "--config", &config, "--checks", "counts,closure"]);
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> = stdout(&out)
        .lines()
        .filter_map(|l| l.strip_prefix("PASS "))
        .map(|l| l.split_whitespace().next().unwrap().to_owned())
        .collect();
    assert_eq!(names, ["counts", "closure"]);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "diag.json", DIAGONAL_SL3);
    let out = flagcs(&["analyze", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL accessibility"));
    assert!(stdout(&out).contains("SKIP counts"));
}

#[test]
fn errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"n": 2}"#);
    let out = flagcs(&["analyze", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    let config = write(dir.path(), "sl2.json", SL2);
    assert_eq!(flagcs(&["check", "--config", &config, "--checks", "nonsense"]).status.code(), Some(2));
    assert_eq!(flagcs(&["analyze", "--config", &config, "--theta", "5"]).status.code(), Some(2));
    assert_eq!(flagcs(&["weyl", "--n", "9"]).status.code(), Some(2));
    assert_eq!(flagcs(&["weyl", "--n", "3", "--word", "[1,2]"]).status.code(), Some(2));
}

#[test]
fn weyl_subcommand() {
    let out = flagcs(&["weyl", "--n", "3", "--cosets", "1;2", "--word", "[3,1,2]"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("|W| = 6"), "{text}");
    assert!(text.contains("w0 = [3,2,1], length 3"), "{text}");
    assert!(text.contains("|W_{1} \\ W / W_{2}| = 2\n"), "{text}");
    assert!(text.contains("[3,1,2]: length 2"), "{text}");
}
