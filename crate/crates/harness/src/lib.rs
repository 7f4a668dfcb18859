//! Experiment configs, figure pipelines, artifact writers and the
//! acceptance driver for `scramblenet-core`.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod run;
pub mod svg;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "SCRAMBLENET_THREADS";

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set.
pub fn init_workers() -> Result<usize> {
    let requested = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| HarnessError::Config(format!("{THREADS_ENV}={v} is not a thread count")))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = requested {
        // a second call finds the pool already built; that is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}
