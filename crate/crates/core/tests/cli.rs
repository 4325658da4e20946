use std::path::Path;
use std::process::{Command, Output};

use tnfeat::report::BenchmarkReport;

fn tnfeat(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_tnfeat"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run tnfeat");
    out
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = tnfeat(dir, args);
    assert!(
        out.status.success(),
        "tnfeat {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn per_stage_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--classes", "3", "--per-class", "8", "--shape", "5x4x3", "--noise", "0.2", "--out", "all.dtf", "--labels", "all.csv"]);
    ok(d, &[
        "ingest", "--kind", "dtf", "--input", "all.dtf", "--labels", "all.csv", "--out", "train.dtf",
        "--out-labels", "train.csv", "--holdout", "0.5", "--test-out", "test.dtf", "--test-labels", "test.csv",
    ]);
    for (method, model) in [("mps", "m.mps"), ("hooi", "m.tkr")] {
        ok(d, &[
            "decompose", "--method", method, "--stack", "train.dtf", "--eps", "1", "--out", model,
            "--features", "train_f.csv", "--labels", "train.csv",
        ]);
        ok(d, &["project", "--model", model, "--stack", "test.dtf", "--out", "test_f.csv", "--labels", "test.csv"]);
        let out = ok(d, &["classify", "--train", "train_f.csv", "--test", "test_f.csv", "--out", "pred.csv"]);
        assert!(out.contains("CSR 100.00% over 12 samples"), "{method}: {out}");
        let pred = std::fs::read_to_string(d.join("pred.csv")).unwrap();
        assert_eq!(pred.lines().count(), 13);
    }
}

#[test]
fn bench_flags_override_config_and_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("exp.cfg"),
        "method = both\neps = 0.9\ntrials = 5\nsynth_per_class = 6\nsynth_shape = 4x4x2\nsynth_noise = 0.5\noutput = from_file.csv\n",
    )
    .unwrap();
    let dry = ok(d, &["bench", "--config", "exp.cfg", "--trials", "2", "--set", "eps=1,0.8", "--dry-run"]);
    assert!(dry.contains("trials = 2"));
    assert!(dry.contains("eps = 1, 0.8"));
    assert!(dry.contains("output = from_file.csv"));

    let pretty = ok(d, &["bench", "--config", "exp.cfg", "--trials", "2", "--output", "r.csv", "--no-timing"]);
    assert!(pretty.contains("Algorithm | eps = 0.9"));
    assert!(!d.join("from_file.csv").exists());
    let report = BenchmarkReport::load_csv(d.join("r.csv")).unwrap();
    assert_eq!(report.cells.len(), 2);
    assert!(report.cells.iter().all(|c| c.csr_trials.len() == 2 && c.wall_ms.is_none()));

    let csv = ok(d, &["report", "--input", "r.csv", "--format", "csv"]);
    assert_eq!(csv, std::fs::read_to_string(d.join("r.csv")).unwrap());
    assert!(ok(d, &["report", "--input", "r.csv"]).contains("Best CSR per H/O ratio"));
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = tnfeat(d, &["bench", "--set", "eps=2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps 2 outside (0, 1]"));
    let out = tnfeat(d, &["decompose", "--method", "mps", "--stack", "missing.dtf", "--out", "m.mps"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
