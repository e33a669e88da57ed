//! Experiment runner for the `longjump` library: configuration files in, CSV and JSON
//! artifacts out.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use serde_json::{json, Value};

pub use config::{parse_config, to_canonical_json, ConfigError, Experiment, ExperimentConfig};
pub use experiments::{run_experiment, Outcome};
pub use output::{Manifest, ManifestEntry, RunWriter};

#[derive(Debug, Clone)]
pub struct RunResult {
    pub pass: bool,
    pub manifest: Manifest,
    pub summary: Vec<String>,
}

/// Runs one configured experiment and writes its artifacts to `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, threads: usize) -> Result<RunResult> {
    let start = Instant::now();
    let measure = cfg.build_measure()?;
    let geom = cfg.build_geometry(&measure)?;
    let outcome = run_experiment(cfg, &measure, &geom)?;
    let (d, log_power) = geom.volume.exponent();

    let mut report = serde_json::Map::new();
    report.insert("experiment".into(), json!(cfg.experiment.kind()));
    report.insert("group".into(), json!(cfg.group.name()));
    report.insert("volume_exponent".into(), json!(d));
    report.insert("volume_log_exponent".into(), json!(log_power));
    report.insert("w_star".into(), json!(geom.w_star));
    report.insert("w_upper".into(), json!(geom.w_upper));
    report.insert("seed".into(), json!(cfg.seed));
    report.extend(outcome.report.clone());
    report.insert("pass".into(), json!(outcome.pass));

    let canonical = to_canonical_json(cfg);
    let mut w = RunWriter::create(dir)?;
    w.write("config.json", canonical.as_bytes())?;
    w.write("results.csv", outcome.results.to_csv().as_bytes())?;
    for (name, table) in &outcome.extra {
        w.write(name, table.to_csv().as_bytes())?;
    }
    w.write_json("report.json", &Value::Object(report))?;
    w.write_json(
        "run.json",
        &json!({
            "seed": cfg.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_seconds": start.elapsed().as_secs_f64(),
            "threads": threads,
            "config_sha256": output::sha256_hex(canonical.as_bytes()),
        }),
    )?;
    let manifest = w.finish()?;
    Ok(RunResult {
        pass: outcome.pass,
        manifest,
        summary: outcome.summary,
    })
}
