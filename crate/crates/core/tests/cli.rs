use std::path::PathBuf;
use std::process::{Command, Output};

use superhp::grassmann::{Algebra, ParamSpec};
use superhp::supermatrix::SuperMatrix;

fn superhp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superhp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("superhp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn classical(k: i64) -> i64 {
    (0..=k / 4).filter(|a| (k - 4 * a) % 6 == 0).count() as i64
}

#[test]
fn dims_table_for_sl2z() {
    let o = superhp(&["dims", "--preset", "sl2z", "--rho", "0", "--k-from", "4", "--k-to", "60", "--format", "tsv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k\tdimV\tc1\tdim_sM\tdim_sS"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split('\t').collect();
        let k: i64 = f[0].parse().unwrap();
        if f[3] == "-" {
            continue;
        }
        let dim: i64 = f[3].parse().unwrap();
        assert_eq!(dim, classical(k), "k = {k}");
        let cusp: i64 = f[4].parse().unwrap();
        assert_eq!(cusp, if k % 2 == 0 { (classical(k) - 1).max(0) } else { 0 }, "k = {k}");
        rows += 1;
    }
    assert!(rows >= 45);
}

#[test]
fn lattice_export_and_validate() {
    let path = scratch("genus2.json");
    let o = superhp(&["lattice", "export", "genus2", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = superhp(&["lattice", "validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("passes agree: true"));
    let o = superhp(&["lattice", "validate", path.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passes_agree"], true);
}

#[test]
fn exit_codes() {
    assert_eq!(superhp(&["dims", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(superhp(&["lattice", "validate", "/nonexistent.json"]).status.code(), Some(2));
    let alg = Algebra::new(ParamSpec::Polynomial { n: 2 }, 1).unwrap();
    let path = scratch("scaled.json");
    let m = SuperMatrix::identity(alg).scale(2.0.into());
    std::fs::write(&path, serde_json::to_string(&m.to_file()).unwrap()).unwrap();
    assert_eq!(superhp(&["group", "check", path.to_str().unwrap()]).status.code(), Some(1));
    let path = scratch("identity.json");
    std::fs::write(&path, serde_json::to_string(&SuperMatrix::identity(alg).to_file()).unwrap()).unwrap();
    assert_eq!(superhp(&["group", "check", path.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn deform_pipeline_and_lift() {
    let pl = scratch("eta-odd-class.json");
    let p = pl.to_str().unwrap();
    assert_eq!(superhp(&["deform", "export", "--preset", "eta-odd", "--out", p]).status.code(), Some(0));
    assert_eq!(superhp(&["deform", "check", p]).status.code(), Some(0));
    let o = superhp(&["deform", "omega", p, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["intertwining"].as_f64().unwrap() < 1e-8);

    let q = scratch("eta2.json");
    let o = superhp(&["qexp", "eta2", "--trunc", "40", "--format", "json"]);
    std::fs::write(&q, &o.stdout).unwrap();
    let out = scratch("bundle.json");
    let o = superhp(&[
        "adapt", "--plattice", p, "--weight", "0", "--basis", q.to_str().unwrap(), "--mask", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bundle: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let terms = bundle[0].as_array().unwrap();
    assert!(terms.iter().any(|t| t["level"] == 0));
    assert!(terms.iter().any(|t| t["level"] == 1));
}

#[test]
fn classify_genus2() {
    let o = superhp(&["deform", "classify", "--preset", "genus2", "--format", "tsv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("H1(g0)\t10\t10"));
    assert!(stdout(&o).contains("H1(g1)\t8\t8"));
}
