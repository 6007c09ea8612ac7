//! Experiment runner: configuration, Monte-Carlo sweeps, CSV/JSON output and
//! the command-line front end.
//!
//! Randomness is drawn from ChaCha8 substreams keyed by `(master_seed, cell,
//! trial)`, and trials are reduced in index order, so results do not depend
//! on how many worker threads ran them.

mod cli;
mod config;
mod experiments;
mod output;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use cli::cli_main;
pub use config::{CodebookKind, PermutationPilots, SystemConfig};
pub use experiments::{
    nmse_plan, run_coherence_distribution, run_design, run_nmse_cells, run_nmse_sweep, run_table1, sweep_kinds,
    CellSpec, CoherenceDistribution, DesignReport, ExperimentRecord, NmseCell, RecordCell, SweepAxis, SweepOutput,
    Table1Row,
};
pub use output::{coherence_csv, design_json, format_float, nmse_csv, table1_csv, write_text, Manifest, ManifestFile};

use crate::{Error, Result};

/// Environment variable capping the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "HBCODEBOOK_WORKERS";

/// Trial index reserved for per-cell setup draws (such as a random design).
pub const SETUP_TRIAL: u32 = u32::MAX;

/// Independent generator for one `(cell, trial)` pair.
pub fn substream(master_seed: u64, cell: u32, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((u64::from(cell) << 32) | u64::from(trial));
    rng
}

/// Worker count: the explicit request if given, otherwise the available
/// parallelism capped by [`WORKERS_ENV`].
pub fn worker_count(requested: Option<usize>) -> Result<usize> {
    if let Some(n) = requested {
        if n == 0 {
            return Err(Error::InvalidArgument("--workers must be at least 1".into()));
        }
        return Ok(n);
    }
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let cap: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                Error::InvalidArgument(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))
            })?;
            Ok(available.min(cap))
        }
        Err(_) => Ok(available),
    }
}

/// Thread pool with the given number of workers.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}
