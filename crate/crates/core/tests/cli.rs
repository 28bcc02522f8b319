use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn fracgame(args: &[&str], scenario: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracgame"))
        .arg(args[0])
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(&args[1..])
        .output()
        .expect("binary runs")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn solve_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["solve", "--grid", "32", "--sample-paths", "2", "--seed", "9"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(fracgame(&args, &scenario("two_player.json"), &a).status.success());
    assert!(fracgame(&args, &scenario("two_player.json"), &b).status.success());
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    assert_eq!(fa.len(), 5);
    assert_eq!(fa, fb);
    let summary: serde_json::Value =
        serde_json::from_slice(&fa.iter().find(|f| f.0 == "solution.json").unwrap().1).unwrap();
    assert!(summary["budget_residual"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn verify_small_run_passes_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["verify", "--grid", "32", "--paths", "4000", "--seed", "3"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = fracgame(&args, &scenario("reference.json"), &a);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    fracgame(&args, &scenario("reference.json"), &b);
    let ja = std::fs::read(a.join("verify.jsonl")).unwrap();
    assert_eq!(ja, std::fs::read(b.join("verify.jsonl")).unwrap());
    let reports = fracgame::cli::parse_jsonl(&String::from_utf8(ja).unwrap()).unwrap();
    assert!(reports.iter().all(|r| r.pass == r.recompute_pass()));
    assert!(a.join("verify.txt").exists() && a.join("verify.csv").exists());
}

#[test]
fn kernel_without_drift_is_all_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("reference.json"))
        .unwrap()
        .replace("\"C\": 1.0", "\"C\": 0.0");
    let file = tmp.path().join("c0.json");
    std::fs::write(&file, text).unwrap();
    let out = tmp.path().join("k");
    assert!(fracgame(&["kernel", "--grid", "16"], &file, &out).status.success());
    let table = std::fs::read_to_string(out.join("kernel.csv")).unwrap();
    let mut rows = 0;
    for line in table.lines().skip(1) {
        rows += 1;
        for cell in line.split(',').skip(1) {
            assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
        }
    }
    assert_eq!(rows, 16);
}

#[test]
fn paths_writes_one_csv_per_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    let o = fracgame(
        &["paths", "--grid", "8", "--paths", "3", "--method", "cholesky"],
        &scenario("reference.json"),
        &out,
    );
    assert!(o.status.success());
    let files = read_dir_sorted(&out);
    assert_eq!(
        files.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(),
        ["path_0.csv", "path_1.csv", "path_2.csv"]
    );
    assert_eq!(String::from_utf8_lossy(&files[0].1).lines().count(), 10);
}

#[test]
fn input_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("reference.json"))
        .unwrap()
        .replace("\"H\": 0.75", "\"H\": 0.5");
    let file = tmp.path().join("bad.json");
    std::fs::write(&file, text).unwrap();
    let o = fracgame(&["solve"], &file, &tmp.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(
        err.starts_with("error class=input msg=") && err.contains("game.H"),
        "{err}"
    );

    let o = fracgame(&["solve"], &tmp.path().join("missing.json"), &tmp.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
    let o = fracgame(
        &["solve", "--method", "fft"],
        &scenario("reference.json"),
        &tmp.path().join("o"),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_checks_exit_with_one() {
    // two paths per estimate leave the heavy-tailed moments unresolved
    let tmp = tempfile::tempdir().unwrap();
    let o = fracgame(
        &["verify", "--grid", "8", "--paths", "2", "--seed", "1"],
        &scenario("reference.json"),
        &tmp.path().join("v"),
    );
    let code = o.status.code();
    let reports =
        fracgame::cli::parse_jsonl(&std::fs::read_to_string(tmp.path().join("v/verify.jsonl")).unwrap()).unwrap();
    assert!(reports.iter().any(|r| r.check.starts_with("eta_moments") && !r.pass));
    assert_eq!(code, Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("check failed: eta_moments"));
}

#[test]
fn bundled_scenarios_round_trip() {
    for name in ["reference.json", "two_player.json"] {
        let sc = fracgame::cli::Scenario::from_file(&scenario(name)).unwrap();
        assert_eq!(fracgame::cli::Scenario::from_json(&sc.to_json()).unwrap(), sc);
    }
}
