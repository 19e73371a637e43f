//! Machine-readable run reports.
//!
//! The JSON document always carries the same top-level keys, listed in
//! [`REPORT_KEYS`]. Wall-clock time is only included on request so that two
//! runs with the same seed produce byte-identical files.

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundSet, TheoremBound};
use crate::models::AssumptionCertificate;
use crate::montecarlo::{
    CheckKind, DecisionRule, MomentEstimate, SegmentMoments, Verification, VerificationVerdict,
    Withheld,
};

pub const REPORT_KEYS: [&str; 9] = [
    "config",
    "certificate",
    "bound_sets",
    "estimates",
    "verdicts",
    "withheld",
    "warnings",
    "summary",
    "timing",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSetEntry {
    #[serde(flatten)]
    pub set: BoundSet,
    pub theorem: Vec<TheoremBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub tau: Vec<MomentEstimate>,
    pub segments: Vec<SegmentMoments>,
    pub attempt_survival: Vec<MomentEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub verdicts: usize,
    pub passed: usize,
    pub failed: usize,
    pub withheld: usize,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub paths_simulated: u64,
    pub steps_simulated: u64,
    pub wall_clock_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: serde_json::Value,
    pub certificate: AssumptionCertificate,
    pub bound_sets: Vec<BoundSetEntry>,
    pub estimates: Estimates,
    pub verdicts: Vec<VerificationVerdict>,
    pub withheld: Vec<Withheld>,
    pub warnings: Vec<String>,
    pub summary: Summary,
    pub timing: Timing,
}

impl Report {
    pub fn new(config: serde_json::Value, run: &Verification, wall_clock_ms: Option<u64>) -> Self {
        let bound_sets = run
            .bound_sets
            .iter()
            .map(|set| BoundSetEntry {
                set: set.clone(),
                theorem: run
                    .theorem_bounds
                    .iter()
                    .filter(|b| b.m == set.m)
                    .copied()
                    .collect(),
            })
            .collect();
        let passed = run.verdicts.iter().filter(|v| v.pass).count();
        Report {
            config,
            certificate: run.certificate.clone(),
            bound_sets,
            estimates: Estimates {
                tau: run.tau.clone(),
                segments: run.segments.clone(),
                attempt_survival: run.survival.clone(),
            },
            verdicts: run.verdicts.clone(),
            withheld: run.withheld.clone(),
            warnings: run.warnings.clone(),
            summary: Summary {
                verdicts: run.verdicts.len(),
                passed,
                failed: run.verdicts.len() - passed,
                withheld: run.withheld.len(),
                all_pass: run.all_pass(),
            },
            timing: Timing {
                paths_simulated: run.paths.len() as u64,
                steps_simulated: run.steps_simulated,
                wall_clock_ms,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is always serializable");
        s.push('\n');
        s
    }
}

/// One row of `verdicts.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub kind: CheckKind,
    pub rule: DecisionRule,
    pub x0: u64,
    /// Moment order, or attempt depth for survival checks.
    pub order: u32,
    pub n_samples: u64,
    pub mean: f64,
    pub std_error: f64,
    pub compared: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

impl From<&VerificationVerdict> for VerdictRow {
    fn from(v: &VerificationVerdict) -> Self {
        VerdictRow {
            kind: v.kind,
            rule: v.rule,
            x0: v.estimate.x0,
            order: v.estimate.m,
            n_samples: v.estimate.n_samples,
            mean: v.estimate.mean,
            std_error: v.estimate.std_error,
            compared: v.compared,
            bound: v.bound,
            slack: v.slack,
            pass: v.pass,
        }
    }
}
