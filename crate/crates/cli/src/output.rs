use std::path::Path;

use markov_up_core::montecarlo::{simulate_trajectory, PathSummary};
use markov_up_core::report::{Report, VerdictRow};
use markov_up_core::{Kernel, VerificationVerdict};
use serde::Serialize;

use crate::config::ExperimentParams;

pub fn write_paths(path: &Path, rows: &[PathSummary]) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_verdicts(
    path: &Path,
    verdicts: &[VerificationVerdict],
) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_path(path)?;
    for v in verdicts {
        w.serialize(VerdictRow::from(v))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryRow {
    path_id: u64,
    x0: u64,
    step: usize,
    state: u64,
}

/// Long-format dump of the first `n` trajectories for every start state.
pub fn write_trajectories<K: Kernel>(
    path: &Path,
    kernel: &K,
    e: &ExperimentParams,
    n: usize,
) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_path(path)?;
    for &x0 in &e.x_grid {
        for path_id in 0..n.min(e.n_traj) as u64 {
            let traj = simulate_trajectory(kernel, x0, e.seed, path_id, e.max_steps)?;
            for (step, &state) in traj.states.iter().enumerate() {
                w.serialize(TrajectoryRow {
                    path_id,
                    x0,
                    step,
                    state,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn print_summary(report: &Report) {
    for v in &report.verdicts {
        println!(
            "{:<5} {:<16} x0={:<5} order={} mean={:<14.6} compared={:<14.6} bound={:<14.6} slack={:.6}",
            if v.pass { "PASS" } else { "FAIL" },
            serde_json::to_value(v.kind)
                .ok()
                .and_then(|k| k.as_str().map(str::to_owned))
                .unwrap_or_default(),
            v.estimate.x0,
            v.estimate.m,
            v.estimate.mean,
            v.compared,
            v.bound,
            v.slack,
        );
    }
    for w in &report.withheld {
        println!("WITHHELD x0={} ({})", w.x0, w.reason);
    }
    let s = &report.summary;
    println!(
        "{} verdicts: {} passed, {} failed, {} withheld",
        s.verdicts, s.passed, s.failed, s.withheld
    );
}
