use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL_STREAM: &str = r#"
[stream]
r = 1.0
h = 1.0
n = 3

[grid]
n_rho = 192
n_theta = 96
sample_half_width = 0.6
sample_n = 13
lift_half_width = 0.8
lift_n = 4

[sweep]
log_eps = [10.0, 20.0]
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_helix-kmd"));
    c.env_remove("HELIX_KMD_THREADS");
    c
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut c = bin();
    c.args(args).arg("--out").arg(out);
    if let Some(p) = config {
        c.arg("--config").arg(p);
    }
    c.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn polygon_phase_column_ends_at_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate-kmd"], None, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[0], 1.0);
    assert!((cols[6] - 4.0).abs() < 1e-5, "{last}");
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["subcommand"], "simulate-kmd");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn alpha_solve_reports_leading_speed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["alpha-solve", "--epsilon-override", "e^-40"], None, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let a = json(&dir.path().join("alpha.json"));
    assert_eq!(a["alpha_leading"].as_f64(), Some(-2.0));
    assert_eq!(a["points"][0]["alpha_leading"].as_f64(), Some(-2.0));
    let alpha = a["points"][0]["alpha"].as_f64().unwrap();
    assert!(alpha < -2.0 && alpha > -3.5, "{alpha}");
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_STREAM);
    let digests = |out: &Path| -> BTreeMap<String, String> {
        let m = json(&out.join("manifest.json"));
        m["files"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
            .collect()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["build-stream"], Some(&cfg), &a).status.code(), Some(0));
    let o = bin()
        .args(["build-stream", "--threads", "1", "--out"])
        .arg(&b)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (da, db) = (digests(&a), digests(&b));
    assert_eq!(da.len(), 6);
    assert_eq!(da, db);
    for name in da.keys() {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        format!("{SMALL_STREAM}\n[extra]\nkey = 1\n"),
        SMALL_STREAM.replace("n = 3", "n = 3\nwidth = 2.0"),
        SMALL_STREAM.replace("n = 3", "n = 1"),
        SMALL_STREAM.replace("log_eps = [10.0, 20.0]", "log_eps = [10.0]"),
        SMALL_STREAM.replace("r = 1.0", "r = 1.0\nepsilon = [1e-5]"),
        "format_version = 9\n".to_string() + SMALL_STREAM,
    ];
    for text in &cases {
        let cfg = write_config(dir.path(), text);
        let o = run(&["residual-scan"], Some(&cfg), &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "{text}\n{}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["simulate-kmd"], Some(&dir.path().join("missing.toml")), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("simulate-kmd").env("HELIX_KMD_THREADS", "lots").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("no-such-command").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_STREAM.replace("h = 1.0", "h = 0.05").replace("[10.0, 20.0]", "[11.5]");
    let cfg = write_config(dir.path(), &text);
    let o = run(&["alpha-solve"], Some(&cfg), dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&dir.path().join("manifest.json"))["exit_code"], 3);
}

fn schema() -> Vec<(String, Vec<String>)> {
    let s = json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/csv_schema.json"));
    s["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            let cols = f["columns"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| c["name"].as_str().unwrap().to_string())
                .collect();
            (f["file"].as_str().unwrap().to_string(), cols)
        })
        .collect()
}

fn matches(pattern: &str, name: &str) -> bool {
    match pattern.split_once("{k}") {
        Some((pre, post)) => name
            .strip_prefix(pre)
            .and_then(|r| r.strip_suffix(post))
            .is_some_and(|k| !k.is_empty() && k.chars().all(|c| c.is_ascii_digit())),
        None => pattern == name,
    }
}

#[test]
fn csv_headers_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{}\n{SMALL_STREAM}", "[kmd]\ndt = 0.01\nt_final = 0.05\nmodes = 16\n\n[config]\nvariant = \"polygon_helix\"\nr = 1.0\nn_outer = 3\n"),
    );
    let schema = schema();
    let mut seen = Vec::new();
    for sub in ["simulate-kmd", "build-stream", "residual-scan", "alpha-solve", "lift-3d"] {
        let out = dir.path().join(sub);
        let mut args = vec![sub];
        if sub == "alpha-solve" || sub == "lift-3d" {
            args.extend(["--epsilon-override", "e^-10"]);
        }
        let o = run(&args, Some(&cfg), &out);
        assert_eq!(o.status.code(), Some(0), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
        for entry in fs::read_dir(&out).unwrap() {
            let name = entry.unwrap().file_name().into_string().unwrap();
            if !name.ends_with(".csv") {
                continue;
            }
            let (pattern, cols) = schema
                .iter()
                .find(|(p, _)| matches(p, &name))
                .unwrap_or_else(|| panic!("{name} is not in the schema"));
            let text = fs::read_to_string(out.join(&name)).unwrap();
            let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
            assert_eq!(header, *cols, "{name}");
            seen.push(pattern.clone());
        }
    }
    for (p, _) in &schema {
        assert!(seen.contains(p), "{p} never produced");
    }
}
