use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use elastica::io::{self, CurveFile, PathFile};
use elastica::{DiscreteCurve, Domain, ManifoldSpec, MetricSpec};
use serde_json::Value;

fn elastica(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastica")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn circle(n: usize, r: f64, x0: f64) -> DiscreteCurve {
    DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::closed(n).unwrap(), move |t| vec![x0 + r * t.cos(), r * t.sin()]).unwrap()
}

fn fixtures(dir: &Path) -> (String, String, String, String) {
    let a = write(dir, "a.json", &io::to_json(&CurveFile::of(&circle(32, 1.0, 0.0))));
    let b = write(dir, "b.json", &io::to_json(&CurveFile::of(&circle(32, 1.1, 0.3))));
    let m1 = write(dir, "m1.json", &io::to_json(&MetricSpec::constant(&[1.0, 1.0]).unwrap()));
    let m2 = write(dir, "m2.json", r#"{"order": 2, "family": "constant", "coeffs": [1.0, 0.0, 1.0]}"#);
    (a, b, m1, m2)
}

#[test]
fn distance_to_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _, m1, _) = fixtures(dir.path());
    let v = stdout_json(&elastica(&["distance", "--metric", &m1, &a, &a, "--time-steps", "4"]));
    assert!(v["distance"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["header"]["command"], "distance");
    assert_eq!(v["header"]["args"]["options"]["time_steps"], 4);
}

#[test]
fn distance_is_nearly_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, m1, _) = fixtures(dir.path());
    let ab = stdout_json(&elastica(&["distance", "--metric", &m1, &a, &b, "--time-steps", "6"]))["distance"].as_f64().unwrap();
    let ba = stdout_json(&elastica(&["distance", "--metric", &m1, &b, &a, "--time-steps", "6"]))["distance"].as_f64().unwrap();
    assert!(ab > 0.1 && (ab - ba).abs() < 0.01 * ab, "{ab} {ba}");
}

#[test]
fn holonomy_of_flat_loop_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, _, _) = fixtures(dir.path());
    let out = elastica(&["holonomy", &a, &b, "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# tool: elastica"));
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next().unwrap(), "curve_id,length,defect,defect_per_length2,cap,pass");
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert!(cols[2].parse::<f64>().unwrap() < 1e-12, "{row}");
        assert_eq!(cols[5], "true");
    }
}

#[test]
fn incompleteness_reproduces_the_vanishing_path() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _, _, m2) = fixtures(dir.path());
    let v = stdout_json(&elastica(&["incompleteness", "--metric", &m2, "--preset", "f0g0", "--grid", "512x200"]));
    let l = v["path_length"].as_f64().unwrap();
    assert!((l - 3.0312).abs() < 0.01 * 3.0312, "{l}");
    assert!(v["length_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["rows"].as_array().unwrap().len(), 200);
}

#[test]
fn bvp_output_is_a_loadable_path() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, m1, _) = fixtures(dir.path());
    let out = dir.path().join("path.json");
    let status = elastica(&["geodesic-bvp", "--metric", &m1, &a, &b, "--time-steps", "4", "--out", out.to_str().unwrap()]);
    assert!(status.status.success() && status.stdout.is_empty());
    let (_, path) = io::read_path(&out).unwrap();
    assert_eq!(path.curves().len(), 5);
    assert_eq!(path.curves()[0].points(), io::read_curve(Path::new(&a)).unwrap().points());
    assert_eq!(path.curves()[4].points(), io::read_curve(Path::new(&b)).unwrap().points());
    let file: PathFile = io::read_json(&out).unwrap();
    assert_eq!(file.curves.len(), 5);

    let v = stdout_json(&elastica(&["shrinkage", out.to_str().unwrap()]));
    assert!(v["lipschitz"].as_f64().unwrap().is_finite());

    let csv = dir.path().join("shrink.csv");
    assert!(elastica(&["shrinkage", out.to_str().unwrap(), "--out", csv.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.lines().any(|l| l == "j,t,length,path_length,flagged"));
}

#[test]
fn ivp_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _, m1, _) = fixtures(dir.path());
    let w = write(dir.path(), "w.json", &io::to_json(&serde_json::json!({ "vectors": vec![[1.0, 0.0]; 32] })));
    let diag = dir.path().join("diag.csv");
    let v = stdout_json(&elastica(&[
        "geodesic-ivp", "--metric", &m1, "--curve", &a, "--velocity", &w, "--T", "0.1", "--steps", "10", "--diagnostics",
        diag.to_str().unwrap(),
    ]));
    assert_eq!(v["curves"].as_array().unwrap().len(), 11);
    assert!(v["summary"]["energy_drift"].as_f64().unwrap() < 1e-3);
    let text = fs::read_to_string(diag).unwrap();
    assert!(text.lines().any(|l| l == "step,t,energy,length,min_speed"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 12);
}

#[test]
fn manifold_info_accepts_inline_json() {
    let v = stdout_json(&elastica(&["manifold-info", r#"{"kind":"hyperbolic","dim":2}"#]));
    assert_eq!(v["sectional_curvature"].as_f64().unwrap(), -1.0);
    assert_eq!(v["ambient_dim"].as_u64().unwrap(), 3);
}

#[test]
fn seed_is_recorded_and_changes_random_fields() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _, _, m2) = fixtures(dir.path());
    let run = |seed: &str| stdout_json(&elastica(&["equivalence", "--metric", &m2, &a, "--samples", "8", "--seed", seed]));
    let (x, y) = (run("1"), run("2"));
    assert_eq!(x["header"]["seed"], 1);
    assert_ne!(x["ratios"], y["ratios"]);
    assert_eq!(x["ratios"], run("1")["ratios"]);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(elastica(&["distance", "--metric", "m.json", "a.json"]).status.code(), Some(2));
    assert_eq!(elastica(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(elastica(&["incompleteness", "--metric", "m.json", "--grid", "12"]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_one_and_say_why() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _, _, _) = fixtures(dir.path());
    let bad = write(dir.path(), "bad.json", "{\"order\": 1,\n \"family\": \"constant\",\n \"coeffs\": [1.0 1.0]}");
    let out = elastica(&["distance", "--metric", &bad, &a, &a]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains("line 3"), "{err}");

    let weird = write(dir.path(), "weird.json", r#"{"order": 1, "family": "cubic", "coeffs": [1.0, 1.0]}"#);
    let out = elastica(&["distance", "--metric", &weird, &a, &a]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown metric family"));

    let seg = write(
        dir.path(),
        "seg.json",
        &io::to_json(&CurveFile::of(
            &DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::open(16).unwrap(), |t| vec![t, 0.0]).unwrap(),
        )),
    );
    assert_eq!(elastica(&["holonomy", &seg]).status.code(), Some(1));
}
