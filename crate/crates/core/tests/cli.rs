use std::path::PathBuf;

use cstar_effective::cli;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("cstar").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cstar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn norm_of_a_matrix_point() {
    let (code, out, _) = run(&["norm", "--presentation", "matrix:2", "--point", "(add (gen 0) (gen 3))", "--prec", "20"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["format"], "cstar-cert/1");
    assert_eq!(v["kind"], "norm");
    assert_eq!(v["method"], "rayleigh-ldl");
    assert_eq!(v["timings"], Value::Null);
    let lo: f64 = v["lo"].as_str().unwrap().parse::<cstar_effective::scalar::Rational>().map(|r| num_traits::ToPrimitive::to_f64(&r).unwrap()).unwrap();
    assert!((lo - 1.0).abs() < 1e-5);
}

#[test]
fn function_points_use_literals() {
    let (code, out, _) = run(&["norm", "--presentation", "fn:1", "--point", "(add (unit) (scal -1 0 (iota)))", "--prec", "10"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(json(&out)["method"], "sup-norm-boxes");
}

#[test]
fn timings_only_on_request() {
    let (_, out, _) = run(&["--timings", "jiangsu", "params", "--stage", "0"]);
    assert!(json(&out)["timings"]["wall_time"].is_string());
}

#[test]
fn reruns_are_byte_identical() {
    let a = run(&["uhf", "demo", "--stages", "2"]);
    let b = run(&["uhf", "demo", "--stages", "2"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
}

#[test]
fn encode_decode_round_trip() {
    let (code, out, _) = run(&["encode", "--point", "(mul (adj (gen 0)) (gen 1))"]);
    assert_eq!(code, 0);
    let c = json(&out)["code"].as_str().unwrap().to_string();
    let (code, out, _) = run(&["decode", "--code", &c]);
    assert_eq!(code, 0);
    let p = json(&out)["point"].as_str().unwrap().to_string();
    let (_, again, _) = run(&["encode", "--point", &p]);
    assert_eq!(json(&again)["code"].as_str().unwrap(), c);
}

#[test]
fn matrix_file_commands() {
    let u = scratch("u.txt", "2\n0\n1\n1\n0\n");
    let v = scratch("v.txt", "2\n1\n0\n0\n-1\n");
    let near = scratch("near.txt", "2\n9/10\n0\n0\n1\n");
    let (code, out, err) = run(&["polar", "--matrix", near.to_str().unwrap(), "--n", "10"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(json(&out)["dim"], 2);
    let (code, out, err) = run(&["schur-log", "--matrix", u.to_str().unwrap(), "--prec", "20"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(json(&out)["eigenvalues"].as_array().unwrap().len(), 2);
    let (code, _, err) = run(&["path", "--u", u.to_str().unwrap(), "--v", v.to_str().unwrap(), "--t", "1/2", "--prec", "20"]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn intertwine_from_config() {
    let cfg = scratch(
        "uhf.toml",
        "a = \"uhf:2^inf\"\nb = \"tensor(uhf:2^inf,uhf:2^inf)\"\nsupplier = \"uhf-legs\"\nstages = 3\n",
    );
    let (code, out, err) = run(&["intertwine", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(json(&out)["transcript"].as_array().map(Vec::len), Some(3));
    let bad = scratch("bad.toml", "a = \"uhf:2^inf\"\nstages = 1\nbogus = 1\n");
    assert_eq!(run(&["intertwine", "--config", bad.to_str().unwrap()]).0, 2);
}

#[test]
fn exit_codes() {
    let (code, _, err) = run(&["norm", "--presentation", "matrix:2", "--point", "(gen"]);
    assert_eq!(code, 2);
    assert_eq!(json(err.lines().last().unwrap())["class"], "parse");
    assert_eq!(run(&["polar", "--matrix", "/nonexistent/m.txt", "--n", "3"]).0, 2);
    assert_eq!(run(&["norm", "--presentation", "O2", "--point", "(gen 0)"]).0, 3);
    assert_eq!(run(&["norm", "--presentation", "cuntz:3", "--point", "(gen 0)"]).0, 3);
    assert_eq!(run(&["jiangsu", "verify", "--stage", "2"]).0, 3);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}
