//! Writes an experiment's CSV tables, SVG charts and run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiments::{execute, Check};
use crate::table::write_csv;

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub config_hash: String,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct CheckEntry<'a> {
    name: &'a str,
    passed: bool,
    detail: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    experiment: &'static str,
    config_hash: &'a str,
    seed: u64,
    seeds: &'a [u64],
    config: &'a ExperimentConfig,
    files: Vec<FileEntry>,
    checks: Vec<CheckEntry<'a>>,
    passed: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| HarnessError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the configured experiment and writes its artifacts to
/// `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|source| HarnessError::Output {
        path: dir.clone(),
        source,
    })?;
    let output = execute(cfg)?;
    let hash = cfg.hash();
    let header = format!(
        "scramblenet {} experiment={} config_hash={} seed={}",
        env!("CARGO_PKG_VERSION"),
        cfg.experiment,
        hash,
        cfg.first_seed()
    );

    let mut written: Vec<(String, Vec<u8>)> = Vec::new();
    for (quantity, rows) in output.table.by_quantity() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &header, &rows)?;
        written.push((format!("{quantity}.csv"), buf));
    }
    for (name, chart) in &output.charts {
        let svg = chart.render().replacen('>', &format!("><!-- {header} -->"), 1);
        written.push((format!("{name}.svg"), svg.into_bytes()));
    }
    written.push(("config.json".into(), cfg.to_json()?.into_bytes()));

    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (name, bytes) in &written {
        let path = dir.join(name);
        write_file(&path, bytes)?;
        entries.push(FileEntry {
            name: name.clone(),
            sha256: sha256_hex(bytes),
        });
        files.push(path);
    }
    let manifest = Manifest {
        tool: "scramblenet",
        version: env!("CARGO_PKG_VERSION"),
        core_version: scramblenet_core::VERSION,
        experiment: cfg.experiment.as_str(),
        config_hash: &hash,
        seed: cfg.first_seed(),
        seeds: &cfg.seeds,
        config: cfg,
        files: entries,
        checks: output
            .checks
            .iter()
            .map(|c| CheckEntry {
                name: &c.name,
                passed: c.passed,
                detail: &c.detail,
            })
            .collect(),
        passed: output.passed(),
    };
    let path = dir.join("manifest.json");
    write_file(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    files.push(path);
    Ok(RunSummary {
        out_dir: dir,
        files,
        checks: output.checks,
        config_hash: hash,
    })
}
