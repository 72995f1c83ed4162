//! Experiment runner for `foch-core`: configuration, orchestration and
//! plot-ready artifacts.
//!
//! Each experiment writes into its own output directory:
//! - `manifest.json`: effective config, version, timing, termination and the
//!   list of every other file written;
//! - CSV time series and tables;
//! - binary snapshots (see [`artifacts::encode_snapshot`]);
//! - JSON certificates and summaries.

pub mod artifacts;
pub mod config;
pub mod run;

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use run::{execute, initial_data, Outcome, Status};

/// Environment variable capping the number of concurrent sweep members.
pub const THREADS_ENV: &str = "FOCH_LAB_THREADS";

/// Worker count for a sweep of `jobs` experiments.
pub fn sweep_workers(jobs: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    cap.min(jobs).max(1)
}

/// Run independent experiments concurrently. Output directories must differ;
/// outcomes come back in input order.
pub fn sweep(configs: &[ExperimentConfig]) -> Result<Vec<Outcome>, ConfigError> {
    let mut seen = HashSet::new();
    for c in configs {
        if !seen.insert(c.output_dir.clone()) {
            return Err(ConfigError(format!(
                "output_dir {} is shared by two sweep members",
                c.output_dir.display()
            )));
        }
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Outcome>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..sweep_workers(configs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = configs.get(i) else { break };
                let out = execute(cfg);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    Ok(slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every member ran"))
        .collect())
}
