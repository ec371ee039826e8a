use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcf")).args(args).output().expect("binary runs")
}

fn qcf_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcf"))
        .args(args)
        .env("QCF_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn grid(dir: &Path, k: usize) -> std::path::PathBuf {
    let g = dir.join(format!("grid{k}.json"));
    let o = qcf(&["generate", "grid", "--k", &k.to_string(), "-o", p(&g)]);
    assert_eq!(o.status.code(), Some(0));
    g
}

#[test]
fn circle_verify_and_render_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 16);
    let c = dir.path().join("c.json");
    let o = qcf(&["circle", p(&g), "--points", "0,16,272,288", "-o", p(&c)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["verification"]["passed"], true);

    let v = qcf(&["verify", p(&g), p(&c), "--contains", "0,16,272,288"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(json(&v)["lambda"][0].as_f64().unwrap() >= 1.0);

    let svg = qcf(&["render", p(&g), p(&c), "--marks", "0,288"]);
    assert_eq!(svg.status.code(), Some(0));
    let text = String::from_utf8(svg.stdout).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<polygon"));
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 32);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |out: &Path| vec!["circle".to_owned(), p(&g).into(), "--points".into(), "0,32,1056".into(), "-o".into(), p(out).into()];
    let oa = Command::new(env!("CARGO_BIN_EXE_qcf")).args(args(&a)).output().unwrap();
    let ob = Command::new(env!("CARGO_BIN_EXE_qcf")).args(args(&b)).output().unwrap();
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let ra = qcf(&["render", p(&g), p(&a)]);
    let rb = qcf(&["render", p(&g), p(&b)]);
    assert_eq!(ra.stdout, rb.stdout);
}

#[test]
fn invariants_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 12);
    let one = qcf_env(&["invariants", p(&g), "--samples", "24", "--seed", "5"], "1");
    let four = qcf_env(&["invariants", p(&g), "--samples", "24", "--seed", "5"], "4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn glued_squares_fail_annular_connectivity() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("glued.json");
    assert_eq!(qcf(&["generate", "glued", "--k", "8", "-o", p(&g)]).status.code(), Some(0));
    let o = qcf(&["invariants", p(&g), "--samples", "32"]);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert_eq!(v["alc_passed"], false);
    assert!(!v["alc_failures"].as_array().unwrap().is_empty());
    assert!(v["L_alc"].is_null());
}

#[test]
fn construction_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 16);
    let o = qcf(&["circle", p(&g), "--points", "0,1,288"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("construction failed"));
}

#[test]
fn bad_input_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(dir.path(), 8);
    assert_eq!(qcf(&["circle", "missing.json", "--points", "0"]).status.code(), Some(4));
    assert_eq!(qcf(&["circle", p(&g), "--points", "0,999"]).status.code(), Some(4));
    assert_eq!(qcf(&["frobnicate"]).status.code(), Some(4));
    assert_eq!(qcf(&["--help"]).status.code(), Some(0));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    assert_eq!(qcf(&["invariants", p(&broken)]).status.code(), Some(4));

    let other = grid(dir.path(), 9);
    let c = dir.path().join("c.json");
    assert_eq!(qcf(&["circle", p(&g), "--points", "0,80", "-o", p(&c)]).status.code(), Some(0));
    let o = qcf(&["verify", p(&other), p(&c)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("belongs to space"));
}

#[test]
fn split_writes_two_arcs() {
    let dir = tempfile::tempdir().unwrap();
    let k = 64;
    let g = grid(dir.path(), k);
    let c = dir.path().join("c.json");
    assert_eq!(qcf(&["circle", p(&g), "--points", "0,64", "-o", p(&c)]).status.code(), Some(0));
    let space_ref = serde_json::from_slice::<Value>(&std::fs::read(&c).unwrap()).unwrap()["space_ref"].clone();
    let diag: Vec<usize> = (0..=k).map(|i| i * (k + 2)).collect();
    let arc = dir.path().join("arc.json");
    std::fs::write(&arc, serde_json::json!({"space_ref": space_ref, "points": diag, "cyclic": false}).to_string()).unwrap();

    let out = dir.path().join("split.json");
    let o = qcf(&["split", p(&g), "--arc", p(&arc), "--eps", "0.3", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let curves = serde_json::from_slice::<Value>(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(curves["curves"].as_array().unwrap().len(), 2);
    assert_eq!(qcf(&["verify", p(&g), p(&out)]).status.code(), Some(0));
}
