use std::collections::BTreeMap;
use std::sync::OnceLock;

use modcurve::bundle::{load_table, CurveBundle};
use modcurve::exactmath::rational::rat_int;
use modcurve::mapbuild::MapStatus;
use modcurve::pipeline::{run_find_map, run_rat_pts, select_classes, PipelineConfig, RunReport};
use modcurve::ratpoints::JTag;

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(name: &str) -> RunReport {
    let b = CurveBundle::load(fixture(name)).unwrap();
    let table = load_table(fixture("curves.jsonl")).unwrap();
    let cfg = PipelineConfig::default();
    let classes = select_classes(&b, &table, &[], &cfg).unwrap();
    let m = run_find_map(&b, &classes, &cfg).unwrap();
    run_rat_pts(&b, m, &cfg).unwrap()
}

fn x36() -> &'static RunReport {
    static R: OnceLock<RunReport> = OnceLock::new();
    R.get_or_init(|| run("x36.json"))
}

#[test]
fn level_36_end_to_end() {
    let r = x36();
    assert_eq!(r.class.as_deref(), Some("432.f"));
    assert_eq!(r.manin.as_deref(), Some("1/216"));
    assert_eq!(r.modular_degree, Some(6));
    let m = r.map.as_ref().unwrap();
    assert_eq!(m.status, MapStatus::Certified);
    assert!(m.relations.iter().all(|c| c.threshold == "162" && c.passes));
    assert_eq!(r.points, ["(0 : 1 : -1 : -2 : 0 : 1)", "(1 : 2 : -2 : 7 : 3 : 4)", "(2 : 1 : -1 : 2 : 6 : 5)"]);
    assert!(r.complete && r.success);
    let j: Vec<_> = r.j_values.iter().map(|v| v.tag.clone()).collect();
    assert_eq!(j.iter().filter(|t| **t == JTag::Cm(-3)).count(), 2);
    let non_cm: Vec<_> = r.j_values.iter().filter(|v| v.tag == JTag::NonCm).collect();
    assert_eq!(non_cm.len(), 1);
    let want = rat_int(-4 * 2187 * 125) * rat_int(439i64.pow(3));
    assert_eq!(non_cm[0].j.as_ref(), Some(&want));
    assert_eq!(r.j_summary.as_ref().unwrap().cm, BTreeMap::from([("-3".to_string(), 2)]));
}

#[test]
fn gamma0_11_end_to_end() {
    let r = run("x11.json");
    assert_eq!(r.class.as_deref(), Some("11a"));
    assert_eq!(r.manin.as_deref(), Some("1"));
    assert_eq!(r.modular_degree, Some(1));
    assert_eq!(r.map.as_ref().unwrap().degree, 1);
    // X₀(11) ≅ 11a1 has five rational points: two cusps and three non-cuspidal points
    assert_eq!(r.points.len(), 5);
    assert!(r.complete && r.success);
    // an isomorphism: one point over each target, the common zero of the degree-1 triple included
    assert_eq!(r.targets.len(), 5);
    assert!(r.targets.iter().all(|t| t.report.as_ref().is_some_and(|p| p.points.len() == 1)));
    let m = r.map.as_ref().unwrap();
    assert!(m.triples.len() >= 2 && m.relations.iter().all(|c| c.passes));
    let s = r.j_summary.as_ref().unwrap();
    assert_eq!(s.cusps, 2);
}
