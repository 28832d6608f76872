use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ousg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ousg"))
        .args(args)
        .env_remove("OUSG_OUTPUT_DIR")
        .output()
        .expect("ousg runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exited normally")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn write_model(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_accepts_a_shipped_model() {
    let out = ousg(&["--model", "rotation-2d", "validate"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("# provenance: ousg "));
}

#[test]
fn non_normal_decompose_exits_4() {
    assert_eq!(code(&ousg(&["--model", "jordan-2d", "decompose"])), 4);
}

#[test]
fn unstable_drift_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_model(dir.path(), "unstable.model", "n = 2\nQ = 1 0 0 1\nB = 1 0 0 -1\n");
    assert_eq!(code(&ousg(&["--model", &path, "validate"])), 3);
}

#[test]
fn malformed_model_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_model(dir.path(), "broken.model", "n = 2\nQ = 1 0 0\nB = -1 0 0 -1\n");
    assert_eq!(code(&ousg(&["--model", &path, "validate"])), 2);
}

#[test]
fn missing_seed_exits_2() {
    assert_eq!(code(&ousg(&["--lambdas", "1", "sample", "--x", "0", "--t", "1"])), 2);
}

#[test]
fn failed_verdict_exits_1() {
    // Below the smallest value of the maximal function the level set is the
    // whole window, so the quotient grows linearly in alpha.
    let out = ousg(&["--lambdas", "1", "--seed", "3", "weaktype", "--alpha-grid", "0.01,0.1,4", "--budget", "500"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("quotient trend slope <= 0.05: FAILS"));
}

#[test]
fn emitted_canonical_model_is_accepted_again() {
    let dir = tempfile::tempdir().unwrap();
    let out = ousg(&["--model", "normal-6d", "decompose", "--emit-model"]);
    assert_eq!(code(&out), 0);
    let path = write_model(dir.path(), "canonical.model", &stdout(&out));
    let again = ousg(&["--model", &path, "decompose", "--emit-model"]);
    assert_eq!(code(&again), 0);
    // Only the name changes: the canonical form of a canonical model is itself.
    let body = |text: &str| text.lines().filter(|l| !l.starts_with("name")).map(String::from).collect::<Vec<_>>();
    assert_eq!(body(&stdout(&again)), body(&stdout(&out)));
}

#[test]
fn verify_all_csv_is_reproducible_across_thread_counts() {
    let run = |threads: &str| {
        let out = ousg(&["--seed", "42", "--threads", threads, "verify-all", "--quick", "--only", "1,3,6,8"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let single = run("1");
    assert_eq!(single, run("1"));
    assert_eq!(single, run("4"));
    let text = String::from_utf8(single).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# provenance:"));
    assert_eq!(lines.next().unwrap(), "criterion,title,metric,value,limit,check,holds");
}

#[test]
fn out_is_resolved_against_the_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_ousg"))
        .args(["--model", "classical-1d", "--out", "validate.csv", "validate"])
        .env("OUSG_OUTPUT_DIR", dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let written = fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    assert!(written.starts_with("# provenance:"));
}
