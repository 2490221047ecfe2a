use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multibeta")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn manifest_hash(dir: &Path) -> String {
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    m["config_sha256"].as_str().unwrap().to_string()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn analyze_affine_gives_zero_column() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"function": {"catalog": "affine", "dim": 2}, "depth": 2}"#);
    let out = run(&["analyze", "--config", "c.json", "--out", "o", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/analyze.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let value: f64 = line.split(',').nth(6).unwrap().parse().unwrap();
        assert!(value.abs() <= 1e-12, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 21 * 3);
}

#[test]
fn missing_grid_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", "{\n  \"function\": {\"grid\": \"no_such_grid.csv\"}\n}\n");
    let out = run(&["analyze", "--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no_such_grid.csv"), "{err}");
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"function": {"catalog": "cone", "dim": 2}, "dpeth": 2}"#);
    let out = run(&["analyze", "--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dpeth"));
}

#[test]
fn parabolic_needs_two_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"function": {"catalog": "kink", "dim": 1}}"#);
    let out = run(&["parabolic", "--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "k.json",
        r#"{"function": {"catalog": "kink", "dim": 2}, "depth": 2, "selectors": ["beta2", "combined"]}"#,
    );
    write(dir.path(), "p.json", r#"{"function": {"catalog": "cone_sin", "dim": 2}, "depth": 2, "table_depth": 1}"#);
    for (cmd, cfg) in [
        ("analyze", "k.json"),
        ("carleson", "k.json"),
        ("igbeta", "k.json"),
        ("reconstruct", "k.json"),
        ("parabolic", "p.json"),
        ("rademacher", "p.json"),
    ] {
        let a = format!("{cmd}_a");
        let b = format!("{cmd}_b");
        for o in [&a, &b] {
            let out = run(&[cmd, "--config", cfg, "--out", o, "--quiet"], dir.path());
            assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
        let first = csv_files(&dir.path().join(&a));
        assert!(!first.is_empty(), "{cmd} wrote no csv");
        assert_eq!(first, csv_files(&dir.path().join(&b)), "{cmd}");
        assert_eq!(manifest_hash(&dir.path().join(&a)), manifest_hash(&dir.path().join(&b)));
    }
}

#[test]
fn manifest_hash_tracks_config_content() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let hash = |cfg: &str, out: &str, extra: &[&str]| {
        let mut args = vec!["igbeta", "--config", cfg, "--out", out, "--quiet"];
        args.extend_from_slice(extra);
        let o = run(&args, d);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        manifest_hash(&d.join(out))
    };
    write(d, "grid.csv", "3,3,0.5,0.5\norigin,0,0\n0,0,0\n0,1,2\n1,1,1\n");
    write(d, "a.json", r#"{"function": {"grid": "grid.csv"}, "quadrature": {"mc_samples": 64}}"#);
    write(d, "b.json", "{\n  \"quadrature\": {\"mc_samples\": 64},\n  \"function\": {\"grid\": \"grid.csv\"}\n}\n");
    write(d, "c.json", r#"{"function": {"grid": "grid.csv"}, "quadrature": {"mc_samples": 65}}"#);
    let a = hash("a.json", "a", &[]);
    assert_eq!(a, hash("b.json", "b", &[]), "formatting alone must not change the hash");
    assert_ne!(a, hash("c.json", "c", &[]));
    assert_ne!(a, hash("a.json", "s", &["--seed", "8"]));
    write(d, "grid.csv", "3,3,0.5,0.5\norigin,0,0\n0,0,0\n0,1,2\n1,1,2\n");
    assert_ne!(a, hash("a.json", "g", &[]), "grid bytes enter the hash");
}
