mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn typecast(args: &[&str], extra: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_typecast"));
    cmd.args(args);
    for p in extra {
        cmd.arg(p);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn estimate(corpus: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_typecast"));
    cmd.arg("estimate-priors")
        .arg("--corpus")
        .arg(corpus)
        .arg("--out")
        .arg(out)
        .args(extra);
    cmd.output().unwrap()
}

#[test]
fn empty_corpus_gives_uniform_table_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("empty.jsonl");
    fs::write(&corpus, "").unwrap();
    let out = tmp.path().join("priors.json");
    let res = estimate(&corpus, &out, &[]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stderr).contains("warning"));
    let table =
        typecast::priors::PriorTable::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    for (_, entry) in table.iter() {
        assert!(entry
            .distribution
            .iter()
            .all(|&p| (p - 1.0 / 6.0).abs() < 1e-12));
    }
    assert!(tmp.path().join("priors.report.json").exists());
    assert!(tmp.path().join("priors.report.txt").exists());
}

#[test]
fn fixture_corpus_matches_hand_smoothing() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c.jsonl");
    let lines = [
        r#"{"author_type":"INTJ","emotion":"neutral","text":"a"}"#,
        r#"{"author_type":"INTJ","emotion":"neutral","text":"b"}"#,
        r#"{"author_type":"intj","emotion":"neutral"}"#,
        r#"{"author_type":"INTJ","emotion":"happy","sentiment":0.4}"#,
        r#"{"author_type":"INTJ","emotion":"bliss"}"#,
    ];
    fs::write(&corpus, lines.join("\n")).unwrap();
    let out = tmp.path().join("p.json");
    let res = estimate(&corpus, &out, &["--quant", "0"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table =
        typecast::priors::PriorTable::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    let intj = table
        .distribution(typecast::parse_mbti("INTJ").unwrap())
        .unwrap();
    // (N_k + 1) / (4 + 6)
    let want = [0.4, 0.2, 0.1, 0.1, 0.1, 0.1];
    for (a, b) in intj.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{intj:?}");
    }
    let report = fs::read_to_string(tmp.path().join("p.report.json")).unwrap();
    assert!(
        report.contains("bliss"),
        "reject should be reported: {report}"
    );
}

#[test]
fn bad_alpha_and_collapsing_quantization_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("empty.jsonl");
    fs::write(&corpus, "").unwrap();
    let out = tmp.path().join("p.json");
    assert_eq!(code(&estimate(&corpus, &out, &["--alpha", "0"])), 2);
    let res = estimate(&corpus, &out, &["--quant", "0.5"]);
    assert_eq!(code(&res), 3);
    assert!(String::from_utf8_lossy(&res.stderr).contains("smaller epsilon"));
    assert!(!out.exists());
}

#[test]
fn remote_without_endpoint_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = typecast(
        &["simulate", "--policy", "remote", "--config"],
        &[
            &common::config_path("default.json"),
            Path::new("--out"),
            tmp.path(),
        ],
    );
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!tmp.path().join("trajectory.jsonl").exists());
}

#[test]
fn missing_config_is_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = typecast(
        &["simulate", "--config"],
        &[
            &tmp.path().join("nope.json"),
            Path::new("--out"),
            tmp.path(),
        ],
    );
    assert_eq!(code(&res), 4);
}

#[test]
fn simulate_then_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let res = Command::new(env!("CARGO_BIN_EXE_typecast"))
        .args(["simulate", "--seed", "11", "--config"])
        .arg(common::config_path("water_shock.json"))
        .arg("--out")
        .arg(&run)
        .output()
        .unwrap();
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).starts_with("config digest: "));
    let traj = run.join("trajectory.jsonl");

    let mae_dir = tmp.path().join("mae");
    let res = Command::new(env!("CARGO_BIN_EXE_typecast"))
        .args([
            "analyze",
            "--metrics",
            "mae,consistency",
            "--group-by",
            "axis:TF",
            "--traj",
        ])
        .arg(&traj)
        .arg("--ref")
        .arg(&traj)
        .arg("--out")
        .arg(&mae_dir)
        .output()
        .unwrap();
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(mae_dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["mae_mean"], 0.0);
    assert_eq!(metrics["mae"].as_array().unwrap().len(), 2);
    let c = &metrics["consistency"];
    assert_eq!(c["agents"].as_array().unwrap().len(), 16);
    assert!(c["mean_rho"].as_f64().unwrap().abs() <= 1.0);

    let plot = fs::read_to_string(mae_dir.join("plot.csv")).unwrap();
    let series = typecast::analysis::parse_plot_csv(&plot).unwrap();
    let groups: Vec<&str> = series.iter().map(|s| s.group.as_str()).collect();
    assert_eq!(groups, ["T", "F"]);
    assert!(plot.starts_with("t,group,mean_sentiment\n"));

    // a plot file works as a reference too
    let csv_dir = tmp.path().join("csv");
    let res = Command::new(env!("CARGO_BIN_EXE_typecast"))
        .args([
            "analyze",
            "--metrics",
            "mae",
            "--group-by",
            "axis:TF",
            "--traj",
        ])
        .arg(&traj)
        .arg("--ref")
        .arg(mae_dir.join("plot.csv"))
        .arg("--out")
        .arg(&csv_dir)
        .output()
        .unwrap();
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(csv_dir.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["mae_mean"].as_f64().unwrap() < 1e-9);
}

#[test]
fn mae_without_reference_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("t.jsonl");
    fs::write(&traj, "").unwrap();
    let res = typecast(
        &["analyze", "--metrics", "mae", "--traj"],
        &[&traj, Path::new("--out"), tmp.path()],
    );
    assert_eq!(code(&res), 2);
}

#[test]
fn validate_passes_on_default_build() {
    let res = typecast(&["validate"], &[]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(
        text.contains("projection") && text.contains("convergence"),
        "{text}"
    );
}
