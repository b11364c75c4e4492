use std::path::Path;
use std::process::{Command, Output};

use naap::harness::Manifest;
use sha2::{Digest, Sha256};

fn naap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_naap"))
        .args(args)
        .output()
        .expect("run naap")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_then_extend_reproduces_full_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (full, base, schemes, extended) = (
        dir.path().join("full.csv"),
        dir.path().join("base.csv"),
        dir.path().join("schemes.jsonl"),
        dir.path().join("extended.csv"),
    );
    let out = naap(&[
        "synth",
        "--records",
        "440",
        "--seed",
        "4",
        "--output",
        path(&full),
        "--schemes",
        path(&schemes),
        "--base",
        path(&base),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = naap(&[
        "extend",
        "--schemes",
        path(&schemes),
        "--dataset",
        path(&base),
        "--output",
        path(&extended),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        std::fs::read(&full).unwrap(),
        std::fs::read(&extended).unwrap()
    );
}

#[test]
fn exit_codes() {
    assert_eq!(naap(&["--help"]).status.code(), Some(0));
    assert_eq!(naap(&["--version"]).status.code(), Some(0));
    assert_eq!(naap(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(naap(&["baseline"]).status.code(), Some(1));
    let missing = naap(&["baseline", "--dataset", "/definitely/not/here.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("here.csv"));
}

#[test]
fn base_csv_cannot_be_scored_directly() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.csv");
    let full = dir.path().join("full.csv");
    naap(&["synth", "--output", path(&full), "--base", path(&base)]);
    let out = naap(&[
        "baseline",
        "--dataset",
        path(&base),
        "--levels",
        "0",
        "--no-featsel",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("num_skip_connections"), "{stderr}");
    assert!(stderr.contains("naap extend"), "{stderr}");
}

#[test]
fn trees_on_extrapolation_need_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    naap(&["synth", "--output", path(&full)]);
    let common = [
        "--dataset",
        path(&full),
        "--levels",
        "0",
        "--no-featsel",
        "--algos",
        "Decision Tree",
    ];
    let mut refused = vec!["extrapolate", "--kind", "dual", "--out", path(dir.path())];
    refused.extend(common);
    assert_eq!(naap(&refused).status.code(), Some(1));
    refused.push("--force-trees");
    assert_eq!(naap(&refused).status.code(), Some(0));
}

#[test]
fn manifest_hashes_match_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    let out_dir = dir.path().join("out");
    naap(&["synth", "--output", path(&full)]);
    let out = naap(&[
        "baseline",
        "--dataset",
        path(&full),
        "--out",
        path(&out_dir),
        "--levels",
        "0",
        "--algos",
        "3-NN,Linear Regression",
        "--format",
        "csv,json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("| 3-NN |"), "{stdout}");

    let manifest: Manifest =
        serde_json::from_slice(&std::fs::read(out_dir.join("baseline_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest.command, "baseline");
    assert_eq!(manifest.inputs.len(), 1);
    assert!(!out_dir.join("baseline.md").exists());
    let names: Vec<&str> = manifest.artifacts.iter().map(|a| a.path.as_str()).collect();
    assert!(names.contains(&"baseline.csv") && names.contains(&"baseline.json"));
    assert!(names.contains(&"traces/baseline/3_nn_L0.json"), "{names:?}");
    for a in &manifest.artifacts {
        let bytes = std::fs::read(out_dir.join(&a.path)).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), a.sha256, "{}", a.path);
        assert_eq!(bytes.len() as u64, a.bytes);
    }
}

#[test]
fn featsel_trace_feeds_importance() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    let out_dir = dir.path().join("out");
    naap(&["synth", "--output", path(&full)]);
    let out = naap(&[
        "featsel",
        "--dataset",
        path(&full),
        "--out",
        path(&out_dir),
        "--algo",
        "Linear Regression (D=0.25)",
        "--level",
        "3",
        "--seed",
        "5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("best subset:"), "{stdout}");
    assert!(out_dir
        .join("traces/featsel/linear_regression_d_0_25_L3.json")
        .exists());

    let out = naap(&[
        "importance",
        "--traces",
        path(&out_dir.join("traces")),
        "--out",
        path(&out_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("importance.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert!(rows[0].starts_with("pooling,algorithm,level,feature_index,feature,rate"));
    // 17 features, pooled per level and per algorithm
    assert_eq!(rows.len(), 1 + 2 * 17);

    let unknown = naap(&[
        "featsel",
        "--dataset",
        path(&full),
        "--algo",
        "SVR",
        "--level",
        "0",
    ]);
    assert_eq!(unknown.status.code(), Some(1));
}
