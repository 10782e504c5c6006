use std::path::PathBuf;
use std::process::{Command, Output};

use macfb::bounds::{DLb, ExponentReport};
use macfb::hypotest::CurvePoint;
use macfb::vlcsim::SimResult;
use serde_json::Value;

fn macfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macfb")).args(args).output().unwrap()
}

fn result(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["manifest"]["version"].is_string());
    v["result"].clone()
}

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.display().to_string()
}

fn tmp(name: &str, body: &str) -> String {
    let p = std::env::temp_dir().join(format!("macfb-cli-{}-{name}", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn dlb_on_ternary_file() {
    let out = macfb(&["dlb", "--channel", &data("ternary.json")]);
    let d: DLb = serde_json::from_value(result(&out)).unwrap();
    assert_eq!(d.value, 2.1);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["manifest"]["inputs"][0][1].as_str().unwrap().len(), 64);
}

#[test]
fn bounds_at_parallel_corner() {
    let r = result(&macfb(&["bounds", "--channel", &data("parallel.json"), "--r1", "0.4248", "--r2", "0.0556"]));
    let rep: ExponentReport = serde_json::from_value(r).unwrap();
    assert!((rep.lb_three_phase - 0.50718).abs() < 0.02, "{rep:?}");
    assert!((rep.ub_three_phase - 0.50718).abs() < 0.02, "{rep:?}");
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(macfb(&["--bogus"]).status.code(), Some(2));
    assert_eq!(macfb(&["simulate", "--channel", "additive:m=3,p=0.1", "--config", "x", "--trials", "10"]).status.code(), Some(2));
    assert_eq!(macfb(&["dlb", "--channel", "/nonexistent.json"]).status.code(), Some(3));
    assert_eq!(macfb(&["dlb", "--channel", "additive:m=3"]).status.code(), Some(3));
    let bad = tmp("bad.json", "{\"x1_size\": 2,\n \"x2_size\": 2,\n \"y_size\": 2, \"Q\": [[[1, 0] [0, 1]]]}");
    let out = macfb(&["dlb", "--channel", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("{bad}:3:")));
}

#[test]
fn renormalize_flag() {
    let off = tmp("off.json", r#"{"x1_size":1,"x2_size":2,"y_size":2,"Q":[[[0.5,0.5],[0.2,0.9]]]}"#);
    assert_eq!(macfb(&["dlb", "--channel", &off]).status.code(), Some(3));
    assert!(macfb(&["--renormalize", "dlb", "--channel", &off]).status.success());
}

#[test]
fn region_csv_layout() {
    let out = macfb(&["--out", "csv", "region", "--channel", "product:bsc=0.1,bsc=0.2", "--points", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# manifest: "));
    assert_eq!(lines[1], "theta,radius,r1,r2");
    assert_eq!(lines.len(), 5);
}

#[test]
fn confirm_exact_and_mc_agree() {
    let design = tmp("design.json", r#"{"confirming_user":1,"x_phase2":[0,1],"p_other":[0.6,0.3,0.1],"n2":10,"n3":0,"lambda":1.0}"#);
    let args = ["confirm", "--channel", "additive:m=3,p=0.1", "--design", &design, "--n-sweep", "6:10:2"];
    let exact = result(&macfb(&args));
    let mut mc_args = args.to_vec();
    mc_args.extend(["--mc", "--trials", "200000", "--seed", "9"]);
    let mc = result(&macfb(&mc_args));
    let e: Vec<CurvePoint> = serde_json::from_value(exact["curve"].clone()).unwrap();
    let m: Vec<CurvePoint> = serde_json::from_value(mc["curve"].clone()).unwrap();
    assert_eq!(e.len(), 3);
    for (a, b) in e.iter().zip(&m) {
        assert_eq!(a.n, b.n);
        assert!((a.beta - b.beta).abs() < 5.0 * (a.beta / 2e5).sqrt() + 1e-4, "{a:?} {b:?}");
    }
    assert_eq!(exact["kl_prediction"], mc["kl_prediction"]);
}

#[test]
fn simulate_output_parses() {
    let r = result(&macfb(&["simulate", "--channel", &data("ternary.json"), "--config", &data("scheme.json"), "--trials", "5000", "--seed", "2"]));
    let s: SimResult = serde_json::from_value(r).unwrap();
    assert_eq!(s.trials, 5000);
    assert!(s.renewal_holds(4.0));
}

#[test]
fn drift_reports_counts() {
    let r = result(&macfb(&["drift", "--channel", "additive:m=3,p=0.1", "--m1", "2", "--m2", "2", "--horizon", "3", "--codes", "random:3:1"]));
    assert_eq!(r["passed"], true);
    assert_eq!(r["reports"].as_array().unwrap().len(), 3);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["violations"] == 0));
    let out = macfb(&["drift", "--channel", "additive:m=3,p=0", "--m1", "2", "--m2", "2", "--horizon", "3", "--codes", "random:1:1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn examples_pass() {
    for name in ["ternary", "vlentropy", "mary"] {
        let out = macfb(&["--out", "csv", "example", name]);
        assert!(out.status.success(), "{name}");
        assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    }
    assert_eq!(macfb(&["example", "nope"]).status.code(), Some(2));
}

#[test]
fn vlentropy_fixture() {
    let r = result(&macfb(&["vlentropy", "--tree", &data("stop_at_first_one.json")]));
    assert_eq!((r["h_yt"].as_f64(), r["h_t"].as_f64(), r["h_yt_given_t"].as_f64()), (Some(1.75), Some(1.5), Some(0.25)));
}
