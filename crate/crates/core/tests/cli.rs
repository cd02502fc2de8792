use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use opdr::io::{load_vectors, save_vectors, Format};
use opdr::vectors::VectorSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;
use tempfile::TempDir;

fn opdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opdr")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_dataset(dir: &TempDir, name: &str, m: usize, d: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let vs = VectorSet::from_flat(m, d, (0..m * d).map(|_| normal.sample(&mut rng)).collect()).unwrap();
    let path = dir.path().join(name);
    save_vectors(&vs, &path, Format::Binary).unwrap();
    path
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn ingest_csv_to_binary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("in.csv");
    std::fs::write(&csv, "# two points\n1.5, 2\n-3,4e-3\n").unwrap();
    let bin = dir.path().join("out.vec");
    let out = opdr(&["ingest", "--format", "csv", s(&csv), s(&bin)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let vs = load_vectors::<f64>(&bin, Format::Binary).unwrap();
    assert_eq!(vs.as_flat(), &[1.5, 2.0, -3.0, 4e-3]);
}

#[test]
fn ingest_rejects_ragged_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("in.csv");
    std::fs::write(&csv, "1,2\n3\n").unwrap();
    let bin = dir.path().join("out.vec");
    let out = opdr(&["ingest", "--format", "csv", s(&csv), s(&bin)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row"));
    assert!(!bin.exists());
}

#[test]
fn eval_identity_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_dataset(&dir, "x.vec", 30, 6, 1);
    let out = opdr(&["eval", "--k", "4", s(&x), s(&x)]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["accuracy"].as_f64(), Some(1.0));
    assert_eq!(v["k"].as_u64(), Some(4));
    assert_eq!(v["metric"].as_str(), Some("l2"));
    assert_eq!(v["per_point"].as_array().unwrap().len(), 30);
}

#[test]
fn reduce_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_dataset(&dir, "x.vec", 25, 12, 2);
    let y = dir.path().join("y.vec");
    let out = opdr(&["reduce", "--dim", "12", s(&x), s(&y)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reduced = load_vectors::<f64>(&y, Format::Binary).unwrap();
    assert_eq!((reduced.count(), reduced.dim()), (25, 12));

    // Full-width PCA is a rotation of the centered data.
    let out = opdr(&["eval", "--k", "3", s(&x), s(&y)]);
    assert_eq!(json(&out)["accuracy"].as_f64(), Some(1.0));

    let z = dir.path().join("z.csv");
    let out = opdr(&["reduce", "--method", "mds", "--metric", "cosine", "--dim", "3", s(&x), s(&z)]);
    assert!(out.status.success());
    let mds = load_vectors::<f64>(&z, Format::Csv).unwrap();
    assert_eq!(mds.dim(), 3);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_dataset(&dir, "x.vec", 10, 3, 3);
    let y = dir.path().join("y.vec");
    assert_eq!(opdr(&["reduce", "--dim", "0", s(&x), s(&y)]).status.code(), Some(2));
    assert_eq!(opdr(&["eval", "--metric", "chebyshev", s(&x), s(&x)]).status.code(), Some(2));
    assert_eq!(opdr(&["sweep", "--sizes", "5,5", s(&x), s(&y)]).status.code(), Some(2));
    assert_eq!(opdr(&["--threads", "0", "eval", s(&x), s(&x)]).status.code(), Some(2));
    assert!(!y.exists());
}

#[test]
fn runtime_errors_exit_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_dataset(&dir, "x.vec", 10, 3, 4);
    let small = write_dataset(&dir, "small.vec", 5, 3, 5);
    let out = dir.path().join("out.csv");

    let r = opdr(&["eval", "--k", "10", s(&x), s(&x)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&r.stderr).is_empty());

    let r = opdr(&["eval", s(&x), s(&small)]);
    assert_eq!(r.status.code(), Some(1));

    // Default sizes go up to 80, far beyond 10 points.
    let r = opdr(&["sweep", s(&x), s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists());

    let missing = dir.path().join("nope.vec");
    assert_eq!(opdr(&["reduce", "--dim", "2", s(&missing), s(&out)]).status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn sweep_fit_recommend_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_dataset(&dir, "x.vec", 120, 16, 6);
    let sweep = dir.path().join("sweep.csv");
    let out = opdr(&["sweep", "--sizes", "20,40", "--repeats", "2", "--seed", "3", s(&x), s(&sweep)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&sweep).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# seed=3 "), "{meta}");
    assert!(meta.contains("k=5"));
    assert_eq!(lines.next(), Some("m,n,ratio,k,metric,method,repeat,accuracy"));
    // PCA dims stop at min(d, m-1): 16 for both sizes, two repeats each.
    assert_eq!(lines.count(), 2 * (16 + 16));

    let fit_path = dir.path().join("fit.json");
    let out = opdr(&["fit", s(&sweep), "-o", s(&fit_path)]);
    assert!(out.status.success());
    let fit: Value = serde_json::from_str(&std::fs::read_to_string(&fit_path).unwrap()).unwrap();
    assert!(fit["c0"].as_f64().unwrap() > 0.0);
    assert_eq!(fit["n_points"].as_u64(), Some(64));

    let out = opdr(&["fit", s(&sweep)]);
    assert_eq!(json(&out), fit);

    let out = opdr(&["recommend", "--fit", s(&fit_path), "--accuracy", "0.8", "--m", "40", "--max-dim", "16"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = json(&out);
    let n = rec["recommended_dim"].as_u64().unwrap();
    assert!((1..=16).contains(&n));

    let out = opdr(&["recommend", "--fit", s(&fit_path), "--accuracy", "1.5", "--m", "40", "--max-dim", "16"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn sweep_is_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_dataset(&dir, "x.vec", 60, 8, 7);
    let run = |name: &str, seed: &str, threads: &str| {
        let p = dir.path().join(name);
        let out = opdr(&["--threads", threads, "sweep", "--sizes", "10,30", "--seed", seed, "--metric", "cosine", s(&x), s(&p)]);
        assert!(out.status.success());
        std::fs::read(p).unwrap()
    };
    let a = run("a.csv", "11", "1");
    assert_eq!(a, run("b.csv", "11", "4"));
    assert_ne!(a, run("c.csv", "12", "4"));
}

#[test]
fn help_exits_zero() {
    let out = opdr(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("sweep"));
}
