use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn qsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

#[test]
fn phi2_fixture_loads() {
    let phi2 = fixture("phi2.json");
    let rho = qsep_cli::state_io::load_state(&phi2).unwrap();
    assert_eq!(rho.profile().dims(), &[2, 2]);
    assert!((rho.purity() - 1.0).abs() < 1e-12);
}

#[test]
fn non_psd_state_exits_3_naming_the_check() {
    let out = qsep(&["measure", "--kind", "er", "--state", fixture("nonpsd.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("psd"), "{err}");
}

#[test]
fn size_mismatch_exits_2() {
    let out = qsep(&["measure", "--state", fixture("mismatch.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_2_before_loading() {
    let phi2 = fixture("phi2.json");
    let p = phi2.to_str().unwrap();
    for args in [
        vec!["stein", "--state", p, "--n", "1"],
        vec!["stein", "--state", p, "--n", "9", "--y", "1"],
        vec!["fsep", "--state", p],
        vec!["measure", "--kind", "nope", "--state", p],
        vec!["protocol", "--kind", "formation", "--state", p, "--K", "2.5"],
        vec!["sweep", "--kind", "stein", "--state", p, "--y", "0:0.1:1"],
        vec!["measure", "--state", p, "--tol", "0"],
        vec!["stein", "--state", "/nonexistent/x.json", "--y", "1"],
    ] {
        let out = qsep(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn oversized_power_exits_5() {
    let out = qsep(&["measure", "--kind", "rg", "--state", fixture("phi2.json").to_str().unwrap(), "--n", "4"]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn relative_entropy_of_phi2_is_one() {
    let out = qsep(&["measure", "--kind", "er", "--state", fixture("phi2.json").to_str().unwrap(), "--tol", "1e-5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    let b = &report["results"][0]["total"];
    assert!((b["lower"].as_f64().unwrap() - 1.0).abs() < 1e-4, "{b}");
    assert!((b["upper"].as_f64().unwrap() - 1.0).abs() < 1e-4, "{b}");
    assert_eq!(report["seed"], 0);
    assert_eq!(report["tol"].as_f64(), Some(1e-5));
    assert!(report["wall_seconds"].as_f64().is_some());
    assert!(b["relaxation"].is_string() && b["upper_certificate"].is_string());
}

#[test]
fn stein_of_phi2_at_rate_one_vanishes() {
    let out = qsep(&["stein", "--state", fixture("phi2.json").to_str().unwrap(), "--n", "1", "--y", "1.0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let b = &stdout_json(&out)["results"][0]["bracket"];
    assert!(b["lower"].as_f64().unwrap().abs() < 1e-6 && b["upper"].as_f64().unwrap().abs() < 1e-6, "{b}");
}

#[test]
fn formation_protocol_report() {
    let out = qsep(&["protocol", "--kind", "formation", "--K", "2", "--state", fixture("phi2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &stdout_json(&out)["results"];
    assert!(r["sepp"]["epsilon"].as_f64().unwrap() <= 1.0 + 1e-6);
    assert_eq!(r["cptp"]["passed"], true);
    assert!(r["output_trace_distance"].as_f64().unwrap() < 1e-8);
}

#[test]
fn distill_protocol_report() {
    let out = qsep(&["protocol", "--kind", "distill", "--K", "2", "--state", fixture("product.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &stdout_json(&out)["results"];
    assert!((r["output_fidelity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(r["sepp"]["epsilon"].as_f64().unwrap() < 1e-6);
}

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("command,state_id,n,K,y,eps,lower,upper,gap,status,seconds"));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn stein_sweep_is_monotone_per_copy_count() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = qsep(&[
        "sweep", "--kind", "stein", "--state", fixture("phi2.json").to_str().unwrap(),
        "--y", "0:0.1:2", "--n", "1..3", "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&std::fs::read_to_string(&csv).unwrap());
    assert_eq!(rows.len(), 63);
    for n in 1..=3 {
        let uppers: Vec<f64> = rows
            .iter()
            .filter(|r| r[2] == n.to_string())
            .map(|r| r[7].parse().unwrap())
            .collect();
        assert_eq!(uppers.len(), 21);
        for w in uppers.windows(2) {
            assert!(w[1] <= w[0] + 1e-7, "n = {n}: {w:?}");
        }
    }
    assert!(rows.iter().all(|r| r[3] == "NA" && r[5] == "NA" && r[10] == "NA"));
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out_path = dir.path().join(name);
        let out = qsep(&[
            "sweep", "--kind", "fsep", "--state", fixture("phi2.json").to_str().unwrap(),
            "--y", "0:0.5:1.5", "--n", "1,2", "--seed", "7", "--out", out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out_path.exists());
        std::fs::read(out_path.with_extension("csv")).unwrap()
    };
    let a = run("a.json");
    let b = run("b.json");
    assert_eq!(a, b);
    let rows = parse_csv(std::str::from_utf8(&a).unwrap());
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0][3], "1");
}
