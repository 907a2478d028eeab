use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gror_cli::corrfile::format_records;
use gror_cli::report::TransformReport;
use gror_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gror(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gror"))
        .args(args)
        .output()
        .expect("run gror")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, ratio: &str, seed: &str) -> std::path::PathBuf {
    let path = dir.join(format!("corr-{ratio}-{seed}.txt"));
    let out = gror(&[
        "generate",
        "--out",
        s(&path),
        "--ratio",
        ratio,
        "--seed",
        seed,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

#[test]
fn register_writes_report_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let corr = generate(dir.path(), "0.9", "1");
    let report_path = dir.path().join("report.json");
    let matrix_path = dir.path().join("matrix.txt");
    let out = gror(&[
        "register",
        "--corr",
        s(&corr),
        "--delta",
        "0.002",
        "--out",
        s(&report_path),
        "--transform-out",
        s(&matrix_path),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report: TransformReport =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.tool, "gror");
    assert_eq!(report.k, 800);
    assert_eq!(report.delta, 0.002);
    assert_eq!(report.consensus_size, report.consensus_ids.len());
    assert!(report.consensus_size >= 3);
    assert!(report.residuals.iter().all(|&r| r < 0.002));
    assert_eq!(report.matrix[3], [0.0, 0.0, 0.0, 1.0]);

    let rows: Vec<Vec<f64>> = fs::read_to_string(&matrix_path)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.as_slice(), report.matrix[i].as_slice());
    }
    // Top-left block is orthonormal.
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| rows[i][k] * rows[j][k]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-9);
        }
    }
}

#[test]
fn report_goes_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let corr = generate(dir.path(), "0.5", "2");
    let out = gror(&["register", "--corr", s(&corr), "--delta", "0.002"]);
    assert!(out.status.success());
    let report: TransformReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.consensus_size >= 3);
}

#[test]
fn garbage_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("garbage.txt");
    fs::write(&path, "this is not\na correspondence file\n").unwrap();
    let out = gror(&["register", "--corr", s(&path), "--delta", "0.01"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let missing = gror(&[
        "register",
        "--corr",
        s(&dir.path().join("nope.txt")),
        "--delta",
        "0.01",
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn pure_noise_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let pairs: Vec<(Vec3, Vec3)> = (0..200)
        .map(|_| {
            (
                Vec3::new(rng.random(), rng.random(), rng.random()),
                Vec3::new(rng.random(), rng.random(), rng.random()),
            )
        })
        .collect();
    let path = dir.path().join("noise.txt");
    fs::write(&path, format_records(pairs.iter().map(|(p, q)| (p, q)))).unwrap();
    let out = gror(&["register", "--corr", s(&path), "--delta", "0.0001"]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let corr = generate(dir.path(), "0.5", "3");
    assert_eq!(
        gror(&[
            "register",
            "--corr",
            s(&corr),
            "--delta",
            "0.002",
            "--colour"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        gror(&["register", "--corr", s(&corr)]).status.code(),
        Some(1)
    );
    assert_eq!(
        gror(&["register", "--corr", s(&corr), "--delta", "-1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        gror(&[
            "register",
            "--corr",
            s(&corr),
            "--delta",
            "0.002",
            "--threads",
            "0"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        gror(&["bench", "--ratios", "0.5,1.0", "--trials", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        gror(&["bench", "--ratios", "-0.2", "--trials", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn zero_outlier_bench_row() {
    let out = gror(&["bench", "--ratios", "0", "--trials", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "ratio,trials,mean_rot_err_deg,mean_trans_err,mean_precision,mean_recall,mean_time_s,max_rot_err_deg"
    );
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[1], "1");
    assert_eq!(fields[4].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn bench_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = gror(&[
            "bench",
            "--ratios",
            "0.5,0.8",
            "--trials",
            "2",
            "--seed",
            "42",
            "--csv",
            s(p),
            "--no-timings",
        ]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn high_outlier_bench_keeps_precision() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("rows.json");
    let out = gror(&[
        "bench",
        "--ratios",
        "0.99",
        "--trials",
        "20",
        "--json",
        s(&json),
    ]);
    assert!(out.status.success());
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["trials"], 20);
    assert!(rows[0]["mean_precision"].as_f64().unwrap() >= 0.95);
}

#[test]
fn generate_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let corr = dir.path().join("c.txt");
    let ids = dir.path().join("ids.txt");
    let out = gror(&[
        "generate",
        "--out",
        s(&corr),
        "--ratio",
        "0.5",
        "--n-inliers",
        "10",
        "--inliers-out",
        s(&ids),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&ids).unwrap().lines().count(), 10);
    let v = gror(&["validate", "--corr", s(&corr)]);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains("20 correspondences"));
}
