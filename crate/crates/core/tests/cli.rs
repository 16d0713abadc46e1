//! Drives the `qasal` binary the way a user would.

use std::path::Path;
use std::process::{Command, Output};

fn qasal(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qasal"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("run qasal")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn train_evaluate_baseline_compare_trace() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let stdout = ok(&qasal(
        &["train", "--preset", "smoke", "--episodes", "2", "--seed", "4", "--out", "run"],
        d,
    ));
    assert!(stdout.contains("200 rows"), "{stdout}");
    assert!(d.join("run/policy.qpol").exists());

    let stdout = ok(&qasal(
        &["evaluate", "--preset", "smoke", "--policy", "run/policy.qpol", "--episodes", "1", "--out", "run"],
        d,
    ));
    assert!(stdout.contains("mean_jfi"));
    ok(&qasal(&["baseline", "--preset", "smoke", "--episodes", "1", "--out", "run"], d));
    ok(&qasal(
        &["baseline", "--preset", "smoke", "--episodes", "1", "--cr-lbt", "on", "--out", "cr"],
        d,
    ));
    let stdout = ok(&qasal(
        &["compare", "run/baseline_report.toml", "cr/baseline_report.toml", "--out", "cmp"],
        d,
    ));
    assert!(stdout.contains("delta"));
    assert!(d.join("cmp/comparison.txt").exists());

    ok(&qasal(&["trace", "--preset", "smoke", "--duration-us", "10000", "--out", "tr"], d));
    assert!(d.join("tr/trace.jsonl").exists());
}

#[test]
fn flags_override_the_configuration_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("exp.toml"),
        "preset = \"smoke\"\nscaling = true\n[learner]\nepisodes = 1\n[env]\naction_mode = \"cw\"\n",
    )
    .unwrap();
    ok(&qasal(
        &[
            "train", "--config", "exp.toml", "--action-mode", "aifsn", "--scaling", "off", "--cr-lbt", "on",
            "--out", "o",
        ],
        d,
    ));
    let manifest = std::fs::read_to_string(d.join("o/train_manifest.toml")).unwrap();
    assert!(manifest.contains("action_mode = \"aifsn\""), "{manifest}");
    assert!(manifest.contains("scaling = false"));
    assert!(manifest.contains("cr_lbt = true"));
}

#[test]
fn manifest_rerun_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&qasal(&["train", "--preset", "smoke", "--episodes", "2", "--out", "a"], d));
    ok(&qasal(&["train", "--config", "a/train_manifest.toml", "--out", "b"], d));
    assert_eq!(
        std::fs::read(d.join("a/train_log.csv")).unwrap(),
        std::fs::read(d.join("b/train_log.csv")).unwrap()
    );
}

#[test]
fn errors_are_reported_with_a_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), "foo = 1\n").unwrap();
    let out = qasal(&["train", "--config", "bad.toml"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("foo"));

    let out = qasal(&["evaluate", "--preset", "smoke", "--policy", "missing.qpol"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.qpol"));

    let out = qasal(&["train", "--scaling", "maybe"], d);
    assert!(!out.status.success());

    let out = qasal(&["compare", "only-one.toml"], d);
    assert!(!out.status.success());
}
