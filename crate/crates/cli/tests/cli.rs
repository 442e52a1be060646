use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn twobody(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twobody"))
        .args(args)
        .env_remove("TWOBODY_SEED")
        .env_remove("TWOBODY_TOL")
        .env_remove("TWOBODY_POINTS")
        .env_remove("TWOBODY_CONFIG")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn passing_suite_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = twobody(&["run", "--suite", "clifford", "--seed", "0x1234", "--json", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["config"]["seed"], "0x1234");
    assert_eq!(r["summary"]["pass"], true);
    assert!(String::from_utf8_lossy(&o.stdout).contains("gamma8"));
}

#[test]
fn impossible_tolerance_exits_one() {
    let o = twobody(&["run", "--suite", "kinematics", "--tol", "1e-300", "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(twobody(&["run", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(twobody(&["run", "--seed", "xyz"]).status.code(), Some(2));
    assert_eq!(twobody(&["mass-map", "--m1", "1", "--m2", "2", "--k-grid", "0:1"]).status.code(), Some(2));
    assert_eq!(twobody(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"points": 3, "unknown_key": 1}"#).unwrap();
    assert_eq!(twobody(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn env_vars_feed_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = Command::new(env!("CARGO_BIN_EXE_twobody"))
        .args(["run", "--suite", "kinematics", "--quiet"])
        .env("TWOBODY_SEED", "0xabc")
        .env("TWOBODY_POINTS", "4")
        .env("TWOBODY_JSON", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["config"]["seed"], "0xabc");
    assert_eq!(r["config"]["points"], 4);
}

#[test]
fn gen_matrices_writes_each_set() {
    let dir = tempfile::tempdir().unwrap();
    for (set, count, dim) in [("gamma8", 7, 8), ("gamma16", 8, 16), ("spin", 10, 8)] {
        let out = dir.path().join(format!("{set}.json"));
        assert_eq!(twobody(&["gen-matrices", "--set", set, "--out", out.to_str().unwrap()]).status.code(), Some(0));
        let d = json(&out);
        assert_eq!(d["dim"], dim);
        assert_eq!(d["matrices"].as_array().unwrap().len(), count);
        assert_eq!(d["matrices"][0]["rows"].as_array().unwrap().len(), dim);
    }
}

#[test]
fn mass_map_csv_agrees_to_roundoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = twobody(&["mass-map", "--m1", "1", "--m2", "3", "--k-grid", "0:10:21", "--csv", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("K2,Kprime2,M_direct,M_via_Kprime,relerr"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r[4] <= 1e-14));
}

#[test]
fn velocity_csv_has_eight_eigenvalues_below_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let o = twobody(&["velocity", "--m", "2", "--points", "6", "--csv", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(!rows.is_empty());
    for r in rows {
        assert_eq!(r.len(), 14);
        assert!(r[6..].iter().all(|&v| (-1e-12..1.0).contains(&v)));
    }
}

#[test]
fn poincare_modes() {
    for mode in ["raw", "canonical", "equivalence"] {
        let o = twobody(&["check-poincare", "--mode", mode, "--points", "3"]);
        assert_eq!(o.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&o.stdout));
    }
    assert_eq!(twobody(&["check-poincare", "--mode", "sideways"]).status.code(), Some(2));
}

#[test]
fn spectrum_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    let out = dir.path().join("out.json");
    fs::write(&cfg, r#"{"m": 1, "potential": {"kind": "inverse-square", "e2": 0.1}}"#).unwrap();
    let o = twobody(&["spectrum", "--config", cfg.to_str().unwrap(), "--r", "2", "--p", "0.1,-0.2,0.3,0,0,0", "--json", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out);
    let e2 = s["energy_sq"].as_f64().unwrap();
    for ev in s["eigenvalues"].as_array().unwrap() {
        let ev = ev.as_f64().unwrap();
        assert!((ev * ev - e2).abs() <= 1e-12 * e2);
    }
    let bad = twobody(&["spectrum", "--config", cfg.to_str().unwrap(), "--r", "2", "--p", "1,2,3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn evolve_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = format!("{}/run_", dir.path().display());
    let diag = dir.path().join("d.json");
    let o = twobody(&["evolve", "--snapshots", "6", "--csv-prefix", &prefix, "--json", diag.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(format!("{prefix}snapshots.csv")).unwrap();
    assert!(text.starts_with("t,norm,energy,pos_fraction,centroid_x1"));
    assert_eq!(text.lines().count(), 7);
    let d = json(&diag);
    assert!(d["max_norm_drift"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn sequential_flag_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |p: &Path| vec!["run".to_string(), "--suite".into(), "positions".into(), "--points".into(), "5".into(), "--quiet".into(), "--json".into(), p.display().to_string()];
    let run = |extra: Option<&str>, p: &Path| {
        let mut v = args(p);
        v.extend(extra.map(String::from));
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        twobody(&refs).status.code()
    };
    assert_eq!(run(None, &a), Some(0));
    assert_eq!(run(Some("--sequential"), &b), Some(0));
    let strip = |p: &Path| {
        let mut v = json(p);
        v["timestamp"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
}
