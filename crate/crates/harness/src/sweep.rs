//! Parallel sweep execution with canonical output ordering.

use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::protocol::{run_trial, GridPoint};
use crate::records::{canonical_sort, TrialRecord};

/// Expand the configuration grid into points.
pub fn grid_points(cfg: &ScenarioConfig) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for &m in &cfg.modulation_orders {
        for &p_r in &cfg.p_r_grid {
            for &snr_db in &cfg.snr_db_grid {
                points.push(GridPoint {
                    modulation_order: m,
                    p_r,
                    snr_db,
                });
            }
        }
    }
    points
}

/// Run the full sweep. `jobs = 0` uses the default thread count. Records
/// come back sorted by (m, p_r, snr_db, trial) regardless of execution
/// order, and per-trial failures are embedded in their rows.
pub fn run_sweep(cfg: &ScenarioConfig, master_seed: u64, jobs: usize) -> anyhow::Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let tasks: Vec<(GridPoint, u64)> = grid_points(cfg)
        .into_iter()
        .flat_map(|p| (0..cfg.n_seeds).map(move |t| (p, t)))
        .collect();

    let work = || {
        tasks
            .par_iter()
            .map(|(point, trial)| run_trial(cfg, point, *trial, master_seed))
            .collect::<Vec<_>>()
    };
    let mut records = if jobs == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()?
            .install(work)
    };
    canonical_sort(&mut records);
    Ok(records)
}
