//! Experiment configuration: a single JSON document, with every field
//! overridable from the command line.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use scramblenet_core::circuit::InitMode;
use scramblenet_core::gradient::linspace;
use scramblenet_core::linalg::MAX_OPERATOR_QUBITS;
use scramblenet_core::scrambling::MAX_DIRECT_SUBSYSTEM;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

/// Largest brick-wall depth accepted from a config.
pub const MAX_DEPTH: usize = 200;
/// Largest per-experiment sample count.
pub const MAX_SAMPLES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    OtocDepth,
    ErrorBounds,
    Landscape,
    LscramSweep,
    Levy,
    TwirlOracle,
    GradientAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::OtocDepth,
        ExperimentKind::ErrorBounds,
        ExperimentKind::Landscape,
        ExperimentKind::LscramSweep,
        ExperimentKind::Levy,
        ExperimentKind::TwirlOracle,
        ExperimentKind::GradientAudit,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::OtocDepth => "otoc-depth",
            ExperimentKind::ErrorBounds => "error-bounds",
            ExperimentKind::Landscape => "landscape",
            ExperimentKind::LscramSweep => "lscram-sweep",
            ExperimentKind::Levy => "levy",
            ExperimentKind::TwirlOracle => "twirl-oracle",
            ExperimentKind::GradientAudit => "gradient-audit",
        }
    }

    /// Tolerance keys the experiment reads, with their defaults.
    pub fn default_tolerances(&self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            ExperimentKind::OtocDepth => &[("early_abs", 1e-9), ("floor_rel", 0.05), ("floor_min_depth", 25.0)],
            ExperimentKind::ErrorBounds => &[("order_slack", 1e-12)],
            ExperimentKind::Landscape => &[("flat_fraction", 0.1)],
            ExperimentKind::LscramSweep => &[("order_min_depth", 10.0)],
            ExperimentKind::Levy => &[("n_sigma", 3.0)],
            ExperimentKind::TwirlOracle => &[("n_sigma", 3.0), ("abs_floor", 1e-12)],
            ExperimentKind::GradientAudit => &[("fd_rel", 1e-4), ("fd_abs", 1e-6), ("cap_slack", 1e-9)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment `{s}`")))
    }
}

fn default_init() -> InitMode {
    InitMode::Generator
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_qubits: usize,
    #[serde(rename = "n_A")]
    pub n_a: usize,
    #[serde(rename = "n_D")]
    pub n_d: usize,
    pub depths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub samples: usize,
    #[serde(default)]
    pub epsilon_grid: Vec<f64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_init")]
    pub init_mode: InitMode,
}

impl ExperimentConfig {
    /// Default parameters for each experiment.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            n_qubits: 8,
            n_a: 3,
            n_d: 3,
            depths: (0..=30).collect(),
            seeds: (0..20).collect(),
            samples: 0,
            epsilon_grid: Vec::new(),
            tolerances: kind.default_tolerances(),
            output_dir: PathBuf::from(format!("out/{kind}")),
            init_mode: InitMode::Generator,
        };
        match kind {
            // Haar-gate init reaches the floor within 30 layers
            ExperimentKind::OtocDepth => ExperimentConfig {
                init_mode: InitMode::HaarGate,
                ..base
            },
            ExperimentKind::ErrorBounds => ExperimentConfig {
                init_mode: InitMode::HaarGate,
                seeds: (0..10).collect(),
                ..base
            },
            ExperimentKind::Landscape => ExperimentConfig {
                n_a: 1,
                n_d: 1,
                depths: vec![2, 30],
                seeds: vec![0],
                epsilon_grid: linspace(-TAU, TAU, 65),
                ..base
            },
            ExperimentKind::LscramSweep => ExperimentConfig {
                n_a: 1,
                n_d: 1,
                seeds: (0..10).collect(),
                ..base
            },
            ExperimentKind::Levy => ExperimentConfig {
                n_qubits: 6,
                n_a: 2,
                n_d: 2,
                depths: vec![6],
                seeds: vec![0],
                samples: 1000,
                epsilon_grid: vec![0.05, 0.2],
                ..base
            },
            ExperimentKind::TwirlOracle => ExperimentConfig {
                n_qubits: 2,
                n_a: 1,
                n_d: 1,
                depths: Vec::new(),
                seeds: vec![0],
                samples: 20000,
                ..base
            },
            ExperimentKind::GradientAudit => ExperimentConfig {
                n_qubits: 4,
                n_a: 2,
                n_d: 2,
                depths: vec![4],
                seeds: (0..5).collect(),
                ..base
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Tolerance by key, falling back to the experiment default.
    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances
            .get(key)
            .copied()
            .or_else(|| self.experiment.default_tolerances().get(key).copied())
            .unwrap_or(0.0)
    }

    /// Shifts the seed list so it starts at `first`, keeping its length.
    pub fn reseed(&mut self, first: u64) {
        let n = self.seeds.len().max(1) as u64;
        self.seeds = (first..first + n).collect();
    }

    pub fn first_seed(&self) -> u64 {
        self.seeds.first().copied().unwrap_or(0)
    }

    /// Hex SHA-256 of the compact JSON form, ignoring `output_dir`.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        let n = self.n_qubits;
        let cap = match self.experiment {
            ExperimentKind::TwirlOracle => 2,
            _ => MAX_OPERATOR_QUBITS.min(8),
        };
        let min_n = match self.experiment {
            ExperimentKind::TwirlOracle => 1,
            ExperimentKind::LscramSweep => 3,
            _ => 2,
        };
        if n < min_n || n > cap {
            return bad(format!("n_qubits = {n} outside {min_n}..={cap} for {}", self.experiment));
        }
        if self.experiment != ExperimentKind::TwirlOracle {
            if self.n_a == 0 || self.n_d == 0 || self.n_a >= n || self.n_d >= n {
                return bad(format!("n_A = {}, n_D = {} must lie in 1..{n}", self.n_a, self.n_d));
            }
        }
        if matches!(self.experiment, ExperimentKind::Levy | ExperimentKind::GradientAudit)
            && (self.n_a > MAX_DIRECT_SUBSYSTEM || self.n_d > MAX_DIRECT_SUBSYSTEM)
        {
            return bad(format!("{} needs n_A, n_D <= {MAX_DIRECT_SUBSYSTEM}", self.experiment));
        }
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if let Some(d) = self.depths.iter().find(|&&d| d > MAX_DEPTH) {
            return bad(format!("depth {d} exceeds {MAX_DEPTH}"));
        }
        let needs_depths = !matches!(self.experiment, ExperimentKind::TwirlOracle);
        if needs_depths && self.depths.is_empty() {
            return bad("depth list is empty".into());
        }
        if self.samples > MAX_SAMPLES {
            return bad(format!("samples = {} exceeds {MAX_SAMPLES}", self.samples));
        }
        let needs_samples = matches!(self.experiment, ExperimentKind::Levy | ExperimentKind::TwirlOracle);
        if needs_samples && self.samples < 2 {
            return bad("experiment needs at least 2 samples".into());
        }
        if self.epsilon_grid.iter().any(|e| !e.is_finite()) {
            return bad("epsilon grid has a non-finite entry".into());
        }
        match self.experiment {
            ExperimentKind::Landscape if self.epsilon_grid.is_empty() => return bad("landscape needs an epsilon grid".into()),
            ExperimentKind::Levy => {
                if self.epsilon_grid.is_empty() || self.epsilon_grid.iter().any(|&e| e <= 0.0 || e >= 1.0) {
                    return bad("levy epsilons must lie in (0, 1)".into());
                }
            }
            _ => {}
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return bad(format!("tolerance {k} = {v} must be finite and non-negative"));
        }
        Ok(())
    }
}
