use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scramblenet::acceptance::{junit_xml, run_all, run_criterion, AcceptanceSettings};
use scramblenet::run::run;
use scramblenet::{init_workers, ExperimentConfig, ExperimentKind, HarnessError, Result};
use scramblenet_core::circuit::{BrickWallCircuit, InitMode, SubsystemPartition};
use scramblenet_core::scrambling::{otoc, otoc_scram};

#[derive(Parser)]
#[command(name = "scramblenet", version, about = "Scrambling experiments on brick-wall quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write CSV, SVG and a manifest.
    Run(RunArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
    /// Averaged OTOC of a saved circuit.
    Otoc(OtocArgs),
    /// Print the default config of an experiment as JSON.
    Preset { experiment: String },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment preset used when no config file is given.
    #[arg(long)]
    experiment: Option<String>,
    /// First seed; the seed list keeps its length.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_qubits: Option<usize>,
    #[arg(long = "na")]
    n_a: Option<usize>,
    #[arg(long = "nd")]
    n_d: Option<usize>,
    /// Comma-separated depth list.
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated epsilon grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    epsilon_grid: Option<Vec<f64>>,
    /// Tolerance override, `key=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_tolerance)]
    tolerances: Vec<(String, f64)>,
    /// `generator` or `haar-gate`.
    #[arg(long)]
    init_mode: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = AcceptanceSettings::default().seed)]
    seed: u64,
    /// Multiplies every tolerance; 0 forces exact comparisons.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Where to write the JUnit XML report.
    #[arg(long)]
    junit: Option<PathBuf>,
    /// Comma-separated criterion numbers; all when omitted.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u8>>,
}

#[derive(Args)]
struct OtocArgs {
    /// Circuit JSON (format v1).
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long = "na")]
    n_a: usize,
    #[arg(long = "nd")]
    n_d: usize,
}

fn parse_tolerance(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.to_string(), v))
}

fn build_config(a: RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&a.config, &a.experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(kind)) => ExperimentConfig::preset(kind.parse::<ExperimentKind>()?),
        (None, None) => return Err(HarnessError::Config("give --config or --experiment".into())),
    };
    if let (Some(_), Some(kind)) = (&a.config, &a.experiment) {
        cfg.experiment = kind.parse()?;
    }
    if let Some(v) = a.n_qubits {
        cfg.n_qubits = v;
    }
    if let Some(v) = a.n_a {
        cfg.n_a = v;
    }
    if let Some(v) = a.n_d {
        cfg.n_d = v;
    }
    if let Some(v) = a.depths {
        cfg.depths = v;
    }
    if let Some(v) = a.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = a.seed {
        cfg.reseed(v);
    }
    if let Some(v) = a.samples {
        cfg.samples = v;
    }
    if let Some(v) = a.epsilon_grid {
        cfg.epsilon_grid = v;
    }
    for (k, v) in a.tolerances {
        cfg.tolerances.insert(k, v);
    }
    if let Some(m) = a.init_mode {
        cfg.init_mode = match m.as_str() {
            "generator" => InitMode::Generator,
            "haar-gate" => InitMode::HaarGate,
            other => return Err(HarnessError::Config(format!("unknown init mode `{other}`"))),
        };
    }
    if let Some(v) = a.out {
        cfg.output_dir = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> Result<bool> {
    let cfg = build_config(a)?;
    let summary = run(&cfg)?;
    println!("experiment {} config_hash {}", cfg.experiment, summary.config_hash);
    for c in &summary.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {} files to {}", summary.files.len(), summary.out_dir.display());
    Ok(summary.passed())
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let settings = AcceptanceSettings {
        seed: a.seed,
        tol_scale: a.tol_scale,
    };
    let outcomes = match a.only {
        Some(ids) => ids
            .into_iter()
            .map(|id| {
                let o = run_criterion(id, &settings);
                println!("{}", o.summary_line());
                o
            })
            .collect::<Vec<_>>(),
        None => {
            let all = run_all(&settings);
            for o in &all {
                println!("{}", o.summary_line());
            }
            all
        }
    };
    for o in &outcomes {
        for c in &o.checks {
            println!("    {:>2} {} [{}] {}", o.id, c.name, if c.passed { "ok" } else { "FAILED" }, c.detail);
        }
    }
    if let Some(path) = a.junit {
        std::fs::write(&path, junit_xml(&outcomes)).map_err(|source| HarnessError::Output { path, source })?;
    }
    let passed = outcomes.iter().filter(|o| o.passed()).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    Ok(passed == outcomes.len())
}

fn cmd_otoc(a: OtocArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&a.circuit)?;
    let c = BrickWallCircuit::from_json(&text)?;
    let part = SubsystemPartition::new(c.n_qubits(), a.n_a, a.n_d)?;
    let report = otoc(&c.unitary(), &part)?;
    println!("otoc {} route {} floor {}", report.value, report.route.as_str(), otoc_scram(&part));
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_workers().and_then(|_| match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Otoc(a) => cmd_otoc(a),
        Command::Preset { experiment } => {
            let cfg = ExperimentConfig::preset(experiment.parse()?);
            println!("{}", cfg.to_json()?);
            Ok(true)
        }
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
