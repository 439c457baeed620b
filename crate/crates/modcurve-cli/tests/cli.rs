use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn modcurve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modcurve")).args(args).env_remove("RUST_BACKTRACE").output().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    d.join(name)
}

#[test]
fn init_summarizes_the_level_36_bundle() {
    let v = json(&modcurve(&["init", fixture("x36.json").to_str().unwrap()]));
    assert_eq!((v["level"].as_u64(), v["index"].as_u64(), v["genus"].as_u64(), v["cusps"].as_u64()), (Some(36), Some(108), Some(6), Some(3)));
}

#[test]
fn malformed_bundle_reports_position() {
    let p = scratch("malformed.json");
    std::fs::write(&p, "{\"label\": \"x\",\n \"level\": }").unwrap();
    let o = modcurve(&["init", p.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn tampered_bundle_is_rejected() {
    let text = std::fs::read_to_string(fixture("x11.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["index"] = serde_json::json!(13);
    let p = scratch("tampered.json");
    std::fs::write(&p, v.to_string()).unwrap();
    let o = modcurve(&["init", p.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid bundle"));
}

#[test]
fn candidates_from_table() {
    let b = fixture("x36.json");
    let v = json(&modcurve(&["candidates", b.to_str().unwrap(), "--table", fixture("curves.jsonl").to_str().unwrap()]));
    let classes: Vec<&str> = v.as_array().unwrap().iter().map(|c| c["isogeny_class"].as_str().unwrap()).collect();
    assert_eq!(classes, ["432.f"]);
    let empty = scratch("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let v = json(&modcurve(&["candidates", b.to_str().unwrap(), "--table", empty.to_str().unwrap()]));
    assert_eq!(v, serde_json::json!([]));
    // more primes only shrink the kernels
    let few = json(&modcurve(&["candidates", b.to_str().unwrap(), "--table", fixture("curves.jsonl").to_str().unwrap(), "--pmax", "7"]));
    assert!(few.as_array().unwrap().len() >= classes.len());
}

#[test]
fn bad_precmult_is_refused() {
    let o = modcurve(&["find-map", fixture("x11.json").to_str().unwrap(), "--table", fixture("curves.jsonl").to_str().unwrap(), "--precmult", "1/2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("precmult"));
}

#[test]
fn rat_pts_on_x0_11_writes_a_report() {
    let out = scratch("x11-report.json");
    let o = modcurve(&[
        "rat-pts",
        fixture("x11.json").to_str().unwrap(),
        "--table",
        fixture("curves.jsonl").to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["class"], "11a");
    assert_eq!(v["modular_degree"], 1);
    assert_eq!(v["points"].as_array().unwrap().len(), 5);
    assert_eq!(v["success"], true);
    assert!(v["timings"].as_array().unwrap().len() >= 4);
}
