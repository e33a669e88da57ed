use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use longjump_cli::output::{sha256_hex, Manifest, MANIFEST_NAME};
use longjump_cli::{parse_config, to_canonical_json};
use serde_json::Value;

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn longjump(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longjump"))
        .args(args)
        .env_remove("LONGJUMP_THREADS")
        .output()
        .expect("binary runs")
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    longjump(&args)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const Z_COLLISION: &str = r#"{
  "group": {"kind": "ZK", "k": 1},
  "subgroups": [{"generators": [[1]], "coordinateMap": "lattice"}],
  "measure": {"components": [{"p": 1.0, "subgroup": 0, "phi": {"family": "power", "alpha": 1.0}}]},
  "experiment": {"kind": "return-exponent", "nRange": [16, 32, 64, 128], "method": "collision", "walkers": 4000},
  "seed": 9
}"#;

#[test]
fn examples_are_canonical() {
    let mut seen = 0;
    for entry in fs::read_dir(examples()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let cfg = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(to_canonical_json(&cfg), text, "{} is not in canonical form", path.display());
        seen += 1;
    }
    assert!(seen >= 10);
    let heis = fs::read_to_string(examples().join("heisenberg.json")).unwrap();
    assert_eq!(to_canonical_json(&parse_config(&heis).unwrap()), heis);
}

#[test]
fn cauchy_return_exponent_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(&examples().join("z-cauchy-return.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    assert_eq!(r["theory_slope"], -1.0);
    assert!((r["fitted_slope"].as_f64().unwrap() + 1.0).abs() <= 0.1);
    assert_eq!(r["pass"], true);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn heavy_centre_audit_has_exponent_five() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(&examples().join("heisenberg-heavy-centre.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    assert_eq!(r["theory_exponent"], 5.0);
    assert_eq!(r["volume_exponent"], 5.0);
}

#[test]
fn tolerance_failure_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(examples().join("z-cauchy-return.json"))
        .unwrap()
        .replace("\"tolerance\": 0.1", "\"tolerance\": 1e-9");
    let cfg = write_config(tmp.path(), "tight.json", &text);
    let out = run_config(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&tmp.path().join("out"))["pass"], false);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn configuration_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_config(tmp.path(), "unknown.json", &Z_COLLISION.replace("return-exponent", "bogus"));
    let out = run_config(&unknown, &tmp.path().join("a"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    assert!(!tmp.path().join("a").exists());

    let zero = write_config(tmp.path(), "zero.json", &Z_COLLISION.replace("\"alpha\": 1.0", "\"alpha\": 0.0"));
    let out = run_config(&zero, &tmp.path().join("b"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/measure/components/0/phi/alpha"));

    let unseeded = write_config(tmp.path(), "unseeded.json", &Z_COLLISION.replace(",\n  \"seed\": 9", ""));
    let out = run_config(&unseeded, &tmp.path().join("c"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/seed"));

    let out = run_config(&tmp.path().join("missing.json"), &tmp.path().join("d"), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "z.json", Z_COLLISION);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run_config(&cfg, &a, &["--threads", "1"]).status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_longjump"))
        .args(["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("LONGJUMP_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    for name in ["results.csv", "report.json", "config.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let run: Value = serde_json::from_str(&fs::read_to_string(b.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["threads"], 3);
    assert_eq!(run["seed"], 9);
}

#[test]
fn manifest_covers_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(&examples().join("z-cauchy-exit.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(tmp.path().join(MANIFEST_NAME)).unwrap()).unwrap();
    let mut on_disk: Vec<String> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != MANIFEST_NAME)
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = manifest.files.iter().map(|f| f.path.clone()).collect();
    listed.sort();
    assert_eq!(listed, on_disk);
    assert!(listed.contains(&"overshoot.csv".to_string()));
    for f in &manifest.files {
        let bytes = fs::read(tmp.path().join(&f.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256, "{}", f.path);
        assert_eq!(bytes.len() as u64, f.bytes);
    }
}

#[test]
fn csv_uses_full_precision_floats() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(&examples().join("z-cauchy-spectral.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("R,quotient,lambda,volume,error_bound,converged,normalized"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1.6000000000000000e1");
    assert!(first[2].contains('e') && first[2].split('e').next().unwrap().len() == 18);
}

#[test]
fn oracle_norm_and_audit_commands() {
    let heis = examples().join("heisenberg.json");
    let out = longjump(&["oracle-norm", heis.to_str().unwrap(), "--element", "1;-1;2", "--cap", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["element"], "1;-1;2");
    let exact = v["oracle_norm"].as_f64().unwrap();
    let ratio = v["closed_form_norm"].as_f64().unwrap() / exact;
    assert!((0.25..=4.0).contains(&ratio), "{v}");

    let out = longjump(&["oracle-norm", heis.to_str().unwrap(), "--element", "1;2", "--cap", "8"]);
    assert_eq!(out.status.code(), Some(1));

    let out = longjump(&["audit-geometry", heis.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("volume exponent 4"));
}
