use std::path::PathBuf;
use std::process::{Command, Output};

use caepp::BellTable;
use caepp::state_model::PhaseSplit;
use caepp_cli::{num, scan_rows, CliError, ScanArgs};

fn caepp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caepp")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = caepp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn column(csv: &str, header: &str) -> Vec<String> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let idx = lines.next().unwrap().split(',').position(|h| h == header).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

fn floats(csv: &str, header: &str) -> Vec<f64> {
    column(csv, header).iter().map(|v| v.parse().unwrap()).collect()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn single_examples() {
    let f = floats(&stdout(&["single", "--p0", "0.33", "--asym", "0.5", "--rounds", "200"]), "fidelity");
    assert_eq!(f.len(), 200);
    assert!(f.windows(2).all(|w| w[1] < w[0]));

    let csv = stdout(&["single", "--p0", "0.51", "--asym", "0.01", "--rounds", "200"]);
    let f = floats(&csv, "fidelity");
    assert!(f.windows(2).all(|w| w[1] > w[0]));
    assert!(*f.last().unwrap() > 0.999);
    let cf = floats(&csv, "closed_form");
    assert!(f.iter().zip(&cf).all(|(a, b)| (a - b).abs() < 1e-11));

    let f = floats(&stdout(&["single", "--p0", "1.0", "--asym", "0.5", "--rounds", "3"]), "fidelity");
    assert_eq!(f, vec![1.0; 3]);
}

#[test]
fn csv_is_self_describing_and_deterministic() {
    let (a, b) = (tmp("det_a.csv"), tmp("det_b.csv"));
    for p in [&a, &b] {
        let out = caepp(&["scan", "--p0-steps", "7", "--asym-steps", "9", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with(&format!("# caepp {} scan p0=0.3:0.6:7 asym=0:1:9 rounds=200\n", env!("CARGO_PKG_VERSION"))));
    assert_eq!(text.lines().count(), 2 + 63);
}

#[test]
fn scan_examples() {
    let args = |p0: f64, lo: f64, hi: f64, steps| ScanArgs {
        p0_min: p0,
        p0_max: p0,
        p0_steps: 1,
        asym_min: lo,
        asym_max: hi,
        asym_steps: steps,
        rounds: 200,
    };
    let rows = scan_rows(&args(0.34, 0.48, 0.5, 2)).unwrap();
    assert!(!rows[0].converges);
    assert!(rows[1].converges);
    assert!(scan_rows(&args(0.6, 0.0, 1.0, 101)).unwrap().iter().all(|r| r.converges));
}

#[test]
fn scan_boundary_is_the_marginal_condition() {
    let csv = stdout(&["scan", "--p0-steps", "61", "--asym-steps", "41"]);
    let (p0, asym, conv) = (floats(&csv, "p0"), floats(&csv, "asym"), column(&csv, "converges"));
    for i in 0..p0.len() {
        let rest = 1.0 - p0[i];
        let edge = (asym[i] * rest).max((1.0 - asym[i]) * rest);
        if (p0[i] - edge).abs() < 1e-9 {
            continue;
        }
        assert_eq!(conv[i] == "true", p0[i] > edge, "p0={} asym={}", p0[i], asym[i]);
    }
}

#[test]
fn mcaepp_example() {
    let csv = stdout(&["mcaepp", "--p", "0.4", "--m", "40"]);
    assert!(*floats(&csv, "fidelity").last().unwrap() >= 1.0 - 1e-6);
    let csv = stdout(&["mcaepp", "--p", "0.4,0.5", "--m", "2,4"]);
    let ms = column(&csv, "m");
    assert_eq!(ms.first().unwrap(), "2");
    assert_eq!(ms.last().unwrap(), "4");
}

#[test]
fn oracle_check_example() {
    let out = caepp(&["oracle-check", "--d", "3", "--m", "2", "--samples", "50", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let dev = floats(&text, "deviation");
    assert!(dev.iter().all(|&v| v < 1e-12));
    let checks = column(&text, "check");
    for c in ["single", "sum-circuit", "statevector-sum", "statevector-star", "star", "depolarizing"] {
        assert_eq!(checks.iter().filter(|v| *v == c).count(), 50, "{c}");
    }
    let out = caepp(&["oracle-check", "--d", "5", "--m", "1", "--samples", "3"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn adaptive_from_channel_file() {
    let path = tmp("near_tie.json");
    let ch = BellTable::from_marginal_params(0.34, 0.48, PhaseSplit::Uniform).unwrap();
    std::fs::write(&path, ch.to_json_string()).unwrap();
    let p = path.to_str().unwrap();
    let csv = stdout(&["adaptive", "--channel", p, "--m", "12", "--schedule", "check:12,rotate,check:12,correct"]);
    assert!(*floats(&csv, "fidelity").last().unwrap() >= 0.999);
    assert_eq!(column(&csv, "phase"), ["start", "check:12", "rotate", "check:12", "correct"]);

    let js: serde_json::Value = serde_json::from_str(&stdout(&["adaptive", "--channel", p, "--format", "json"])).unwrap();
    assert_eq!(js["phases"].as_array().unwrap().len(), 8);
    assert!(js["preprocessing"].is_object());
}

#[test]
fn mub_lists_every_line() {
    let csv = stdout(&["mub", "--p0", "0.34", "--asym", "0.48"]);
    assert_eq!(column(&csv, "line"), ["Slope(0)", "Vertical", "Slope(1)", "Slope(2)"]);
    let w = floats(&csv, "weight");
    assert!((w.iter().sum::<f64>() - (3.0 * 0.34 + 1.0)).abs() < 1e-10);
    assert_eq!(column(&csv, "chosen").iter().filter(|c| *c == "true").count(), 1);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| caepp(args).status.code();
    assert_eq!(code(&["single", "--p0", "1.5", "--asym", "0.5"]), Some(2));
    assert_eq!(code(&["single", "--p0", "0.5"]), Some(2));
    assert_eq!(code(&["single", "--channel", "/nonexistent/ch.json"]), Some(2));
    assert_eq!(code(&["adaptive", "--p0", "0.4", "--asym", "0.5", "--schedule", "check:3,rotate"]), Some(2));
    assert_eq!(code(&["adaptive", "--p0", "0.4", "--asym", "0.5", "--model", "other"]), Some(2));
    assert_eq!(code(&["mcaepp", "--p", "0.05", "--m", "2"]), Some(2));
    assert_eq!(code(&["bogus"]), Some(2));
    assert_eq!(code(&["oracle-check", "--m", "9", "--samples", "1"]), Some(3));
    assert_eq!(code(&["mcaepp", "--p", "0.4", "--m", "10", "--max-rounds", "10"]), Some(4));
    assert_eq!(CliError::Mismatch(1e-3).exit_code(), 5);
}

#[test]
fn bad_channel_file_is_rejected() {
    let path = tmp("bad.json");
    std::fs::write(&path, r#"{"d": 3, "p": [[0.5, 0.5, 0.5], [0, 0, 0], [0, 0, 0]]}"#).unwrap();
    let out = caepp(&["mub", "--channel", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn twelve_significant_digits() {
    assert_eq!(num(2.0 / 3.0), "0.666666666667");
    assert_eq!(num(1e-20), "1e-20");
}
