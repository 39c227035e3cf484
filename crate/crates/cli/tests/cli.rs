use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn csm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csm")).args(args).output().expect("run csm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn single_spin_average_is_one_eighth() {
    let v = json(&csm(&["ed", "--N", "1", "--J", "1"]));
    assert_eq!(v["S_inf"].as_f64(), Some(0.125));
    assert_eq!(v["flagged"], Value::Bool(false));
}

#[test]
fn bound_from_explicit_couplings() {
    let v = json(&csm(&["bound", "--set", "iz-only", "--J", "1,2,3"]));
    assert_eq!(v["value"].as_f64(), Some(0.0625));
    assert_eq!(v["N"].as_u64(), Some(3));
    let v = json(&csm(&["bound", "--quantities", "Iz,IzH0", "--J", "1,1"]));
    assert!((v["value"].as_f64().unwrap() - 5.0 / 52.0).abs() < 1e-15);
}

#[test]
fn field_pseudo_set_is_flagged_approximate() {
    let v = json(&csm(&["bound", "--set", "bb", "--N", "16", "--x", "1"]));
    assert_eq!(v["target"], "Bz");
    assert!(v["flags"].as_array().unwrap().iter().any(|f| f == "APPROXIMATE"));
}

#[test]
fn scan_rows_are_sorted_and_stable() {
    let args = ["scan", "--N", "32,16", "--x", "2,1", "--set", "iz-only,basic3", "--threads", "1"];
    let a = csm(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,x,h,set,value,rank,residual,flags"));
    let keys: Vec<(String, f64, usize)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[3].to_string(), f[1].parse().unwrap(), f[0].parse().unwrap())
        })
        .collect();
    assert_eq!(keys.len(), 8);
    let mut sorted = keys.clone();
    sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    assert_eq!(keys, sorted);
    assert_eq!(stdout(&csm(&args)), text);
}

#[test]
fn scan_feeds_extrapolate() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("scan.csv");
    let o = csm(&["scan", "--N", "64:1024:*2", "--x", "2", "--set", "basic3", "--output", scan.to_str().unwrap()]);
    assert!(o.status.success());
    let fit = json(&csm(&["extrapolate", "--in", scan.to_str().unwrap(), "--x", "2"]));
    let s_inf = fit["intercept"].as_f64().unwrap();
    let last: f64 =
        fs::read_to_string(&scan).unwrap().lines().last().unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!(s_inf > 0.0 && s_inf < last, "{s_inf} vs {last}");
}

#[test]
fn fit_log_recovers_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let mut text = String::from("x,S\n");
    for x in [6.0f64, 8.0, 11.0, 16.0, 22.0, 32.0, 45.0, 64.0] {
        text.push_str(&format!("{x},{}\n", 0.0553 * (x / 0.137).ln() / x));
    }
    fs::write(&path, text).unwrap();
    let o = csm(&["fit-log", "--in", path.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("A = 0.055300"), "{out}");
    assert!(out.contains("B = 0.13700"), "{out}");
}

#[test]
fn config_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# bound at N = 8\ncommand = bound\nN = 8\nx = 1\nset = basic3\n").unwrap();
    let v = json(&csm(&["--config", cfg.to_str().unwrap()]));
    assert_eq!(v["N"].as_u64(), Some(8));
    let v = json(&csm(&["--config", cfg.to_str().unwrap(), "--N", "16"]));
    assert_eq!(v["N"].as_u64(), Some(16));
    let v = json(&csm(&["bound", "--config", cfg.to_str().unwrap(), "--set", "iz-only"]));
    assert_eq!(v["quantities"].as_array().unwrap().len(), 1);
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "command = bound\nN = 8\ncolour = red\n").unwrap();
    let o = csm(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    assert_eq!(csm(&["bound", "--set", "nonsense", "--N", "4", "--x", "1"]).status.code(), Some(1));
    assert_eq!(csm(&["bound", "--N", "4"]).status.code(), Some(1));
    assert_eq!(csm(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(csm(&["--help"]).status.code(), Some(0));
}

#[test]
fn solve_elements_prints_closed_forms() {
    let o = csm(&["solve-elements", "--pairs", "S0z|IzH0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("S0z IzH0 : 1/16*S1"), "{}", stdout(&o));
}

#[test]
fn couplings_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    let o = csm(&["couplings", "--N", "5", "--x", "1"]);
    assert!(o.status.success());
    fs::write(&path, &o.stdout).unwrap();
    let a = json(&csm(&["bound", "--set", "basic3", "--couplings", path.to_str().unwrap()]));
    let b = json(&csm(&["bound", "--set", "basic3", "--N", "5", "--x", "1"]));
    assert!((a["value"].as_f64().unwrap() - b["value"].as_f64().unwrap()).abs() < 1e-14);
}
