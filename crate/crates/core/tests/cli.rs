use std::path::Path;
use std::process::{Command, Output};

use spheretv::io::{read_signal_csv, write_signal_csv};
use spheretv::Signal;

fn spheretv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spheretv")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constant_signal_is_reproduced() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("y.csv");
    let out = dir.path().join("x.csv");
    let y = Signal::new(2, [0.6, 0.8].repeat(20)).unwrap();
    write_signal_csv(&input, &y).unwrap();
    let o = spheretv(&["denoise", s(&input), "--lambda", "0.5", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let x = read_signal_csv(&out).unwrap();
    for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
        assert!((a - b).abs() < 1e-4);
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.csv.json")).unwrap()).unwrap();
    assert_eq!(report["lambda"], 0.5);
    assert!(report["iterations"].as_u64().unwrap() > 0);
}

#[test]
fn chi0_output_is_binary_and_scored() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("y.csv");
    let truth = dir.path().join("t.csv");
    let out = dir.path().join("x.csv");
    write_signal_csv(&input, &Signal::scalar(vec![0.9, 1.3, 0.2, -0.8, -1.1, -0.4, 0.7, 1.0]).unwrap()).unwrap();
    write_signal_csv(&truth, &Signal::scalar(vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0, 1.0]).unwrap()).unwrap();
    let o = spheretv(&[
        "denoise", s(&input), "--lambda", "0.4", "--rho", "0.5", "--project", "chi0", "--truth", s(&truth), "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let x = read_signal_csv(&out).unwrap();
    assert!(x.as_slice().iter().all(|v| *v == 1.0 || *v == -1.0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.csv.json")).unwrap()).unwrap();
    assert_eq!(report["mse"], 0.0);
    assert_eq!(report["miou"], 1.0);
}

#[test]
fn missing_input_is_an_io_error() {
    let o = spheretv(&["denoise", "/nonexistent/y.csv", "--out", "/tmp/never.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(spheretv(&["certify", "--n", "30"]).status.code(), Some(2));
    assert_eq!(spheretv(&["denoise"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("y.csv");
    write_signal_csv(&input, &Signal::scalar(vec![1.0, -1.0]).unwrap()).unwrap();
    let out = dir.path().join("x.csv");
    assert_eq!(spheretv(&["denoise", s(&input), "--rho", "-1", "--out", s(&out)]).status.code(), Some(2));
}

#[test]
fn certify_small_instances() {
    let o = spheretv(&["certify", "--n", "8", "--trials", "3", "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
}

#[test]
fn bench_is_deterministic() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let o = spheretv(&[
            "bench", "--experiment", "circle1d", "--size", "60", "--trials", "2", "--lambda-grid", "0.2,0.4",
            "--seed", "11", "--out-dir", s(dir.path()),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let records = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(dir.path().join("spec.json").exists());
        (strip_times(&records), strip_times(&summary))
    };
    assert_eq!(run(), run());
}

fn strip_times(csv: &str) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let col = rdr.headers().unwrap().iter().position(|h| h == "time_sec").unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().enumerate().filter(|(i, _)| *i != col).map(|(_, v)| v.to_string()).collect())
        .collect()
}

#[test]
fn generate_writes_truth_and_noisy() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("t.csv");
    let noisy = dir.path().join("n.csv");
    let o = spheretv(&[
        "generate", "--experiment", "hue", "--size", "8", "--seed", "2", "--truth", s(&truth), "--noisy", s(&noisy),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_signal_csv(&truth).unwrap();
    let n = read_signal_csv(&noisy).unwrap();
    assert_eq!((t.dim(), t.len()), (n.dim(), n.len()));
    assert!(t.is_sphere_valued() && n.is_sphere_valued());
}
