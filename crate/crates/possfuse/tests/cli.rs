#![allow(clippy::approx_constant)]
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use possfuse::doc::ConstraintDoc;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_possfuse"));
    cmd.env_remove("POSSFUSE_TOLERANCE");
    cmd
}

fn put(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_vec(v).unwrap()).unwrap();
    path
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = bin();
    for a in args {
        cmd.arg(a);
    }
    cmd.output().unwrap()
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn abc_doc(components: Value) -> Value {
    json!({"space": {"labels": ["a", "b", "c"]}, "components": components})
}

fn indicator(labels: &[&str]) -> Value {
    abc_doc(json!([{"weight": 1.0, "fn": {"indicator": labels}}]))
}

#[test]
fn overlapping_indicators_fuse_to_their_intersection() {
    let dir = TempDir::new().unwrap();
    let a = put(&dir, "a.json", &indicator(&["a", "b"]));
    let b = put(&dir, "b.json", &indicator(&["b", "c"]));
    let r = report(&run(&[&"fuse", &a, &b]));
    assert_eq!(
        r["result"]["components"],
        json!([{"weight": 1.0, "fn": {"indicator": ["b"]}}])
    );
    assert_eq!(r["diagnostics"]["normalizer"], json!(1.0));
}

#[test]
fn uninformative_is_neutral_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    // probabilistic but not canonical: the first component has norm 1/2
    let doc = abc_doc(json!([
        {"weight": 1.0, "fn": {"dense": [0.5, 0.25, 0.0]}},
        {"weight": 0.25, "fn": {"indicator": ["c"]}},
        {"weight": 0.25, "fn": {"dense": [0.5, 1.0, 0.75]}}
    ]));
    let a = put(&dir, "a.json", &doc);
    let one = put(&dir, "one.json", &abc_doc(json!([{"weight": 1.0, "fn": "one"}])));
    let r = report(&run(&[&"fuse", &a, &one]));
    let parsed: ConstraintDoc = serde_json::from_value(doc).unwrap();
    let canonical = ConstraintDoc::describe(&parsed.build().unwrap().canonicalize().unwrap().sorted());
    // exact float equality on every weight and value
    assert_eq!(r["result"], serde_json::to_value(&canonical).unwrap());
}

#[test]
fn disjoint_indicators_exit_with_code_four() {
    let dir = TempDir::new().unwrap();
    let a = put(&dir, "a.json", &indicator(&["a"]));
    let b = put(&dir, "b.json", &indicator(&["b", "c"]));
    let out = run(&[&"fuse", &a, &b]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible"));
}

#[test]
fn exit_codes_for_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let a = put(&dir, "a.json", &indicator(&["a"]));
    let other = put(
        &dir,
        "o.json",
        &json!({"space": {"labels": ["x", "y"]}, "components": [{"weight": 1.0, "fn": "one"}]}),
    );
    assert_eq!(run(&[&"fuse", &a, &other]).status.code(), Some(3));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"space\": ").unwrap();
    assert_eq!(run(&[&"fuse", &a, &bad]).status.code(), Some(2));
    let unknown = put(&dir, "u.json", &indicator(&["zz"]));
    assert_eq!(run(&[&"fuse", &a, &unknown]).status.code(), Some(2));
    let short = put(
        &dir,
        "s.json",
        &abc_doc(json!([{"weight": 1.0, "fn": {"dense": [1.0]}}])),
    );
    assert_eq!(run(&[&"fuse", &a, &short]).status.code(), Some(2));

    let partial = put(&dir, "m.json", &json!({"pairs": [["a", "x"], ["b", "y"]]}));
    assert_eq!(run(&[&"push", &a, &partial]).status.code(), Some(3));
    assert_eq!(run(&[&"marginalize", &a, &"--keep", &"left"]).status.code(), Some(3));

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&[&"fuse", &a, &missing]).status.code(), Some(1));
    assert_eq!(run(&[&"fuse", &a]).status.code(), Some(2));
    assert_eq!(run(&[&"fuse", &a, &a, &"--tolerance", &"-1"]).status.code(), Some(2));

    let scenario = put(
        &dir,
        "sc.json",
        &json!({"steps": 2, "sensor_std": 0.0, "initial": {"mean": 0.0, "variance": 1.0}}),
    );
    assert_eq!(run(&[&"filter", &scenario]).status.code(), Some(2));
}

fn fiber_map(dir: &TempDir) -> (PathBuf, PathBuf) {
    let doc = json!({
        "space": {"labels": ["1", "2", "3", "4"]},
        "components": [{"weight": 1.0, "fn": {"dense": [0.2, 0.9, 0.4, 0.1]}}]
    });
    let map = json!({"pairs": [["1", "a"], ["2", "a"], ["3", "b"], ["4", "b"]]});
    (put(dir, "f.json", &doc), put(dir, "xi.json", &map))
}

#[test]
fn push_reproduces_fiber_sup_example() {
    let dir = TempDir::new().unwrap();
    let (doc, map) = fiber_map(&dir);
    let r = report(&run(&[&"push", &doc, &map]));
    assert_eq!(
        r["result"],
        json!({"space": {"labels": ["a", "b"]}, "components": [{"weight": 1.0, "fn": {"dense": [0.9, 0.4]}}]})
    );
}

#[test]
fn push_pull_push_and_identity_maps() {
    let dir = TempDir::new().unwrap();
    let (doc, map) = fiber_map(&dir);
    let once = report(&run(&[&"push", &doc, &map]));
    let pushed = put(&dir, "pushed.json", &once["result"]);
    let pulled = report(&run(&[&"pull", &pushed, &map]));
    let pulled_doc = put(&dir, "pulled.json", &pulled["result"]);
    let again = report(&run(&[&"push", &pulled_doc, &map]));
    assert_eq!(once["result"], again["result"]);
    assert_eq!(
        pulled["result"]["components"][0]["fn"],
        json!({"dense": [0.9, 0.9, 0.4, 0.4]})
    );

    let id = put(
        &dir,
        "id.json",
        &json!({"pairs": [["1", "1"], ["2", "2"], ["3", "3"], ["4", "4"]]}),
    );
    let same = report(&run(&[&"push", &doc, &id]));
    let input: Value = serde_json::from_slice(&std::fs::read(&doc).unwrap()).unwrap();
    assert_eq!(same["result"], input);
}

#[test]
fn marginalize_product_documents() {
    let dir = TempDir::new().unwrap();
    let doc = json!({
        "space": {"product": [{"labels": ["a", "b"]}, {"labels": ["x", "y", "z"]}]},
        "components": [{"weight": 1.0, "fn": {"dense": [0.1, 0.2, 0.3, 0.4, 1.0, 0.6]}}]
    });
    let p = put(&dir, "p.json", &doc);
    let left = report(&run(&[&"marginalize", &p, &"--keep", &"left"]));
    assert_eq!(left["result"]["components"][0]["fn"], json!({"dense": [0.3, 1.0]}));
    let right = report(&run(&[&"marginalize", &p, &"--keep", &"right"]));
    assert_eq!(
        right["result"]["components"][0]["fn"],
        json!({"dense": [0.4, 1.0, 0.6]})
    );
}

#[test]
fn dempster_worked_example_and_vacuous_input() {
    let dir = TempDir::new().unwrap();
    let m1 = put(
        &dir,
        "m1.json",
        &json!({"frame": ["a", "b", "c"], "focal": [
        {"set": ["a", "b"], "mass": 0.6}, {"set": ["c"], "mass": 0.4}]}),
    );
    let m2 = put(
        &dir,
        "m2.json",
        &json!({"frame": ["a", "b", "c"], "focal": [
        {"set": ["b", "c"], "mass": 0.5}, {"set": ["a"], "mass": 0.5}]}),
    );
    let r = report(&run(&[&"dempster", &m1, &m2]));
    let d = &r["dempster"];
    assert_eq!(d["verdict"], json!("equal"));
    assert!((d["conflict"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    let masses: Vec<f64> = d["combined"]["focal"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["mass"].as_f64().unwrap())
        .collect();
    for (got, want) in masses.iter().zip([0.375, 0.375, 0.25]) {
        assert!((got - want).abs() < 1e-12);
    }

    let vacuous = put(
        &dir,
        "v.json",
        &json!({"frame": ["a", "b", "c"], "focal": [{"set": ["a", "b", "c"], "mass": 1.0}]}),
    );
    let r = report(&run(&[&"dempster", &m1, &vacuous]));
    assert_eq!(r["dempster"]["conflict"], json!(0.0));
    let sets: Vec<&Value> = r["dempster"]["combined"]["focal"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| &f["set"])
        .collect();
    assert_eq!(sets, [&json!(["a", "b"]), &json!(["c"])]);

    let clash = put(
        &dir,
        "x.json",
        &json!({"frame": ["a", "b", "c"], "focal": [{"set": ["b"], "mass": 1.0}]}),
    );
    let only_c = put(
        &dir,
        "y.json",
        &json!({"frame": ["a", "b", "c"], "focal": [{"set": ["c"], "mass": 1.0}]}),
    );
    let out = run(&[&"dempster", &clash, &only_c]);
    assert_eq!(out.status.code(), Some(4));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn filter_single_step_and_oracle_columns() {
    let dir = TempDir::new().unwrap();
    let sc = put(
        &dir,
        "sc.json",
        &json!({
            "steps": 1, "transition": 1.0, "process_noise": 0.0, "obs_coeff": 1.0, "sensor_std": 1.0,
            "initial": {"mean": 0.0, "variance": 1.0}, "observations": {"given": [0.0]}
        }),
    );
    let out = run(&[&"filter", &sc]);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0].join(","), possfuse::report::CSV_HEADER);
    let weight: f64 = rows[1][6].parse().unwrap();
    assert!((weight - 0.707_106_8).abs() < 1e-6);
    assert_eq!(rows[1][7], "");

    let long = put(
        &dir,
        "long.json",
        &json!({
            "steps": 50, "transition": 0.9, "process_noise": 0.3, "sensor_std": 0.7,
            "mode": {"finite_resolution": {"cell_width": 0.5}},
            "initial": {"mean": 1.0, "variance": 2.0}
        }),
    );
    let csv = dir.path().join("out.csv");
    let rep = dir.path().join("report.json");
    let out = run(&[
        &"filter",
        &long,
        &"--oracle",
        &"--seed",
        &"7",
        &"--csv",
        &csv,
        &"--out",
        &rep,
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&std::fs::read_to_string(&csv).unwrap());
    assert_eq!(rows.len(), 51);
    let worst = rows[1..]
        .iter()
        .map(|r| r[8].parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3);
    let r: Value = serde_json::from_slice(&std::fs::read(&rep).unwrap()).unwrap();
    assert_eq!(r["steps"].as_array().unwrap().len(), 50);
    assert!(r["steps"][0]["cell"].is_array());
}

#[test]
fn filter_seed_changes_readings_deterministically() {
    let dir = TempDir::new().unwrap();
    let sc = put(
        &dir,
        "sc.json",
        &json!({"steps": 5, "sensor_std": 1.0, "initial": {"mean": 0.0, "variance": 1.0}}),
    );
    let a = run(&[&"filter", &sc, &"--seed", &"1"]).stdout;
    let b = run(&[&"filter", &sc, &"--seed", &"1"]).stdout;
    let c = run(&[&"filter", &sc, &"--seed", &"2"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn check_reports_axioms_and_domination() {
    let dir = TempDir::new().unwrap();
    let doc = put(&dir, "d.json", &indicator(&["a", "b"]));
    let inside = put(&dir, "p.json", &json!({"weights": [0.5, 0.5, 0.0]}));
    let outside = put(&dir, "q.json", &json!({"weights": [0.5, 0.0, 0.5]}));
    let r = report(&run(&[&"check", &doc, &"--probability", &inside]));
    assert_eq!(r["check"]["axioms"]["holds"], json!(true));
    assert_eq!(r["check"]["dominates"], json!(true));
    let out = run(&[&"check", &doc, &"--probability", &outside]);
    assert_eq!(out.status.code(), Some(5));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["check"]["dominates"], json!(false));
}

fn kernel_doc(theta: Value) -> Value {
    json!({"ell": [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]], "theta": theta})
}

#[test]
fn general_fusion_with_kernel_files() {
    let dir = TempDir::new().unwrap();
    let a = put(
        &dir,
        "a.json",
        &abc_doc(json!([{"weight": 1.0, "fn": {"dense": [0.3, 1.0, 0.0]}}])),
    );
    let b = put(
        &dir,
        "b.json",
        &abc_doc(json!([{"weight": 1.0, "fn": {"dense": [1.0, 0.5, 0.3]}}])),
    );
    let max = put(
        &dir,
        "max.json",
        &kernel_doc(json!([["a", "b", "c"], ["b", "b", "c"], ["c", "c", "c"]])),
    );
    let r = report(&run(&[&"fuse", &a, &b, &"--kernel", &max]));
    assert_eq!(r["operation"], json!("general_fuse"));
    assert_eq!(r["result"]["components"][0]["fn"], json!({"dense": [0.3, 1.0, 0.3]}));

    // (a − b) mod 3 is not associative
    let minus = put(
        &dir,
        "minus.json",
        &kernel_doc(json!([["a", "c", "b"], ["b", "a", "c"], ["c", "b", "a"]])),
    );
    assert_eq!(run(&[&"fuse", &a, &b, &"--kernel", &minus]).status.code(), Some(2));
    assert!(run(&[&"fuse", &a, &b, &"--kernel", &minus, &"--no-verify-kernel"])
        .status
        .success());
}

#[test]
fn tolerance_comes_from_flag_or_environment() {
    let dir = TempDir::new().unwrap();
    let a = put(&dir, "a.json", &indicator(&["a", "b"]));
    let r = report(
        &bin()
            .arg("check")
            .arg(&a)
            .env("POSSFUSE_TOLERANCE", "1e-6")
            .output()
            .unwrap(),
    );
    assert_eq!(r["tolerance"], json!(1e-6));
    let r = report(
        &bin()
            .args(["check", "--tolerance", "1e-3"])
            .arg(&a)
            .env("POSSFUSE_TOLERANCE", "1e-6")
            .output()
            .unwrap(),
    );
    assert_eq!(r["tolerance"], json!(1e-3));
}

#[test]
fn out_flag_writes_the_report_file() {
    let dir = TempDir::new().unwrap();
    let a = put(&dir, "a.json", &indicator(&["a", "b"]));
    let path: &Path = &dir.path().join("r.json");
    let out = run(&[&"check", &a, &"--out", &path]);
    assert!(out.status.success() && out.stdout.is_empty());
    let r: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    assert_eq!(r["operation"], json!("check"));
}
