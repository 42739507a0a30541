use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lasing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lasing")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn point_prints_header_and_one_row() {
    let out = lasing(&["point", "--pump", "0.02"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("swept_value,n_a,n_sigma,intensity,g2,g3,g4,jump,beta,engine,n_max,converged"));
    assert!(lines[1].starts_with("2e0,"));
    assert!(lines[1].ends_with(",true"));
}

#[test]
fn point_json_parses() {
    let out = lasing(&["point", "--pump", "0.05", "--format", "json", "--engine", "both"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["discrepancy"]["n_a_rel"].as_f64().unwrap() < 1e-6);
}

#[test]
fn invalid_input_exits_with_two() {
    for args in [
        &["point", "--gamma-a", "-1"][..],
        &["point", "--tail-tol", "0.5"],
        &["sweep", "--min", "10", "--max", "1"],
        &["sweep", "--count", "0"],
        &["dump-rho", "--universal"],
    ] {
        let out = lasing(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn unknown_flags_are_rejected() {
    let out = lasing(&["point", "--bogus"]);
    assert_ne!(code(&out), 0);
}

fn sweep_into(dir: &Path, name: &str, workers: &str) -> (Vec<u8>, Vec<u8>) {
    let stem = dir.join(name);
    let out = lasing(&[
        "sweep",
        "--min",
        "0.1",
        "--max",
        "8",
        "--count",
        "9",
        "--distributions",
        "--workers",
        workers,
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (fs::read(stem.with_extension("csv")).unwrap(), fs::read(stem.with_extension("json")).unwrap())
}

#[test]
fn sweeps_are_byte_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = sweep_into(dir.path(), "a", "1");
    let b = sweep_into(dir.path(), "b", "4");
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let pn = dir.path().join("a_pn");
    assert_eq!(fs::read_dir(&pn).unwrap().count(), 9);
    let first = fs::read_to_string(pn.join("point_0000.csv")).unwrap();
    assert!(first.lines().any(|l| l == "n,p_n,poisson_n,delta_n"));
}

#[test]
fn dump_rho_writes_a_unit_trace_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let rho_path = dir.path().join("rho.txt");
    let l_path = dir.path().join("l.txt");
    let out = lasing(&[
        "dump-rho",
        "--pump",
        "0.02",
        "--nmax",
        "6",
        "--tail-tol",
        "1e-3",
        "--out",
        rho_path.to_str().unwrap(),
        "--liouvillian",
        l_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&rho_path).unwrap();
    assert!(text.contains("# dim = 14"));
    let mut trace = 0.0;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split(' ').collect();
        assert_eq!(f.len(), 4, "{line}");
        let (i, j): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        assert!(i < 14 && j < 14);
        if i == j {
            trace += f[2].parse::<f64>().unwrap();
        }
    }
    assert!((trace - 1.0).abs() < 1e-12);

    let l = fs::read_to_string(&l_path).unwrap();
    assert!(l.contains("# size = 196"));
    assert!(l.lines().filter(|l| !l.starts_with('#')).count() > 196);
}

#[test]
fn peak_reports_the_universal_maximum() {
    let out = lasing(&["peak", "--universal"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').take(4).map(|x| x.parse().unwrap()).collect();
    assert!((row[0] - 2.0939).abs() < 1e-3, "{text}");
    assert!((row[1] - 1.10285).abs() < 1e-4, "{text}");
    assert!(row[2] < row[0] && row[0] < row[3]);
}

#[test]
fn peak_at_the_scan_edge_exits_with_three() {
    let out = lasing(&["peak", "--universal", "--pmax", "1"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).lines().nth(1).unwrap().ends_with(",false"));
}

#[test]
fn accept_exit_status_follows_the_report() {
    let out = lasing(&["accept", "--suite", "limits"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);

    // the figure checks include criteria this model does not meet
    let out = lasing(&["accept", "--suite", "figures"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).lines().any(|l| l.starts_with("FAIL")));
}

#[test]
fn unconverged_rows_exit_with_three() {
    let out = lasing(&["sweep", "--min", "1", "--max", "200", "--count", "3", "--ceiling", "40", "--engine", "oracle"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().any(|l| l.starts_with("# row 2:")));
}
