//! Monte Carlo estimation of hitting-time and segment moments, and one-sided
//! statistical comparison against the certified bounds.
//!
//! Paths are simulated in parallel, each on its own counter-based substream
//! keyed by `(seed, start state, path index)`. Per-path records are collected in
//! index order and reduced sequentially, so every estimate is bit-identical
//! regardless of the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::inv_beta_reg;

use crate::bounds::{bound_set, theorem_bound, BoundSet, TheoremBound};
use crate::error::{Error, Result};
use crate::models::{certify, AssumptionCertificate, BenchmarkModelSpec};
use crate::paths::{decompose_attempts, Attempt, Rise};
use crate::process::{simulate_path, Kernel, StopReason, Trajectory};
use crate::rng::{derive_seed, path_rng};

/// Two-sided 99% normal quantile used for `ci99_upper`.
pub const Z99_TWO_SIDED: f64 = 2.576;

/// Below this many paths a run is flagged as low-sample.
pub const LOW_SAMPLE_PATHS: usize = 100;

/// Hard minimum: a variance needs two samples.
pub const MIN_PATHS: usize = 2;

/// Attempt-survival depths checked by [`verify`].
pub const SURVIVAL_DEPTH: u32 = 5;

/// Significance level of every one-sided test.
pub const ALPHA: f64 = 0.01;

/// Segment indices at or above this are lumped together in diagnostics.
const INDEX_BUCKETS: usize = 8;

fn z_one_sided() -> f64 {
    Normal::standard().inverse_cdf(1.0 - ALPHA)
}

/// Welford accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    TauM,
    RiseLengthM,
    FallLengthM,
    OvershootM,
    AttemptSurvival,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub quantity: Quantity,
    /// Moment order, or the attempt depth `i` for survival frequencies.
    pub m: u32,
    pub x0: u64,
    pub n_samples: u64,
    pub mean: f64,
    pub std_error: f64,
    pub ci99_upper: f64,
    pub capped_paths: u64,
    pub low_sample: bool,
}

impl MomentEstimate {
    fn from_stats(quantity: Quantity, m: u32, x0: u64, stats: &RunningStats, capped: u64) -> Self {
        let std_error = stats.std_error();
        MomentEstimate {
            quantity,
            m,
            x0,
            n_samples: stats.count(),
            mean: stats.mean(),
            std_error,
            ci99_upper: stats.mean() + Z99_TWO_SIDED * std_error,
            capped_paths: capped,
            low_sample: (stats.count() as usize) < LOW_SAMPLE_PATHS,
        }
    }
}

/// One row of `paths.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSummary {
    pub path_id: u64,
    pub x0: u64,
    pub tau: Option<u64>,
    pub attempts: u32,
    pub max_state: u64,
    pub capped: bool,
}

/// Everything kept from one simulated path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathRecord {
    pub summary: PathSummary,
    pub steps: u64,
    pub rises: Vec<Rise>,
    pub attempts: Vec<Attempt>,
}

impl PathRecord {
    fn proper_rises(&self) -> impl Iterator<Item = &Rise> {
        self.rises.iter().filter(|r| r.end > r.start)
    }
}

fn check_paths(n_traj: usize) -> Result<()> {
    if n_traj < MIN_PATHS {
        return Err(Error::TooFewPaths {
            min: MIN_PATHS,
            got: n_traj,
        });
    }
    Ok(())
}

/// The trajectory of path `path_id` from `x0`, on the same substream that
/// [`simulate_records`] uses for it.
pub fn simulate_trajectory<K: Kernel + ?Sized>(
    kernel: &K,
    x0: u64,
    seed: u64,
    path_id: u64,
    max_steps: u64,
) -> Result<Trajectory> {
    let mut rng = path_rng(derive_seed(seed, x0), path_id);
    simulate_path(kernel, x0, max_steps, &mut rng)
}

/// Simulates and decomposes `n_traj` independent paths from `x0`.
pub fn simulate_records<K: Kernel + ?Sized>(
    kernel: &K,
    x0: u64,
    n_traj: usize,
    seed: u64,
    max_steps: u64,
) -> Result<Vec<PathRecord>> {
    (0..n_traj as u64)
        .into_par_iter()
        .map(|path_id| {
            let traj = simulate_trajectory(kernel, x0, seed, path_id, max_steps)?;
            let capped = traj.stop_reason == StopReason::StepCap;
            let (rises, attempts) = match traj.tau {
                Some(t) if t > 0 => {
                    let d = decompose_attempts(&traj)?;
                    (d.rises, d.attempts)
                }
                _ => (Vec::new(), Vec::new()),
            };
            Ok(PathRecord {
                summary: PathSummary {
                    path_id,
                    x0,
                    tau: traj.tau,
                    attempts: attempts.len() as u32,
                    max_state: traj.max_state(),
                    capped,
                },
                steps: traj.steps() as u64,
                rises,
                attempts,
            })
        })
        .collect()
}

fn capped_count(records: &[PathRecord]) -> u64 {
    records.iter().filter(|r| r.summary.capped).count() as u64
}

/// `E_x τ^m` for each requested order, from already simulated records.
pub fn tau_moments(records: &[PathRecord], x0: u64, m_list: &[u32]) -> Result<Vec<MomentEstimate>> {
    check_paths(records.len())?;
    let capped = capped_count(records);
    if capped as usize == records.len() {
        return Err(Error::AllCapped {
            paths: records.len(),
        });
    }
    Ok(m_list
        .iter()
        .map(|&m| {
            let mut stats = RunningStats::default();
            for tau in records.iter().filter_map(|r| r.summary.tau) {
                stats.push((tau as f64).powi(m as i32));
            }
            MomentEstimate::from_stats(Quantity::TauM, m, x0, &stats, capped)
        })
        .collect())
}

pub fn estimate_tau_moments<K: Kernel + ?Sized>(
    kernel: &K,
    x0: u64,
    m_list: &[u32],
    n_traj: usize,
    seed: u64,
    max_steps: u64,
) -> Result<Vec<MomentEstimate>> {
    check_paths(n_traj)?;
    let records = simulate_records(kernel, x0, n_traj, seed, max_steps)?;
    tau_moments(&records, x0, m_list)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedMean {
    /// Segment index `j`; the last bucket collects every `j ≥` its index.
    pub index: usize,
    pub n_samples: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SegmentStat {
    Estimated {
        estimate: MomentEstimate,
        by_index: Vec<IndexedMean>,
    },
    NoSamples,
}

impl SegmentStat {
    pub fn estimate(&self) -> Option<&MomentEstimate> {
        match self {
            SegmentStat::Estimated { estimate, .. } => Some(estimate),
            SegmentStat::NoSamples => None,
        }
    }
}

/// Pooled segment moments for one start state and moment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMoments {
    pub x0: u64,
    pub m: u32,
    /// `(t_j − T_j)^m` over rises that move.
    pub rise_length: SegmentStat,
    /// `(T_{j+1} − t_j)^m · 1(attempt fails)` over all attempts.
    pub fall_length: SegmentStat,
    /// `(X_{t_j} − X_{T_j})^m` over rises that move.
    pub overshoot: SegmentStat,
}

fn pool(
    quantity: Quantity,
    m: u32,
    x0: u64,
    capped: u64,
    samples: impl Iterator<Item = (usize, u64)>,
) -> SegmentStat {
    let mut all = RunningStats::default();
    let mut buckets = [RunningStats::default(); INDEX_BUCKETS];
    for (index, value) in samples {
        let v = (value as f64).powi(m as i32);
        all.push(v);
        buckets[index.min(INDEX_BUCKETS - 1)].push(v);
    }
    if all.count() == 0 {
        return SegmentStat::NoSamples;
    }
    let by_index = buckets
        .iter()
        .enumerate()
        .filter(|(_, b)| b.count() > 0)
        .map(|(index, b)| IndexedMean {
            index,
            n_samples: b.count(),
            mean: b.mean(),
        })
        .collect();
    SegmentStat::Estimated {
        estimate: MomentEstimate::from_stats(quantity, m, x0, &all, capped),
        by_index,
    }
}

pub fn segment_moments(records: &[PathRecord], x0: u64, m: u32) -> Result<SegmentMoments> {
    check_paths(records.len())?;
    let capped = capped_count(records);
    if capped as usize == records.len() {
        return Err(Error::AllCapped {
            paths: records.len(),
        });
    }
    let hit = || records.iter().filter(|r| !r.summary.capped);
    let rise_length = pool(
        Quantity::RiseLengthM,
        m,
        x0,
        capped,
        hit().flat_map(|r| r.proper_rises().map(|s| (s.index, s.length()))),
    );
    let fall_length = pool(
        Quantity::FallLengthM,
        m,
        x0,
        capped,
        hit().flat_map(|r| {
            r.attempts
                .iter()
                .map(|a| (a.index, if a.success { 0 } else { a.length() }))
        }),
    );
    let overshoot = pool(
        Quantity::OvershootM,
        m,
        x0,
        capped,
        hit().flat_map(|r| r.proper_rises().map(|s| (s.index, s.overshoot()))),
    );
    Ok(SegmentMoments {
        x0,
        m,
        rise_length,
        fall_length,
        overshoot,
    })
}

pub fn estimate_segment_moments<K: Kernel + ?Sized>(
    kernel: &K,
    x0: u64,
    m: u32,
    n_traj: usize,
    seed: u64,
    max_steps: u64,
) -> Result<SegmentMoments> {
    check_paths(n_traj)?;
    let records = simulate_records(kernel, x0, n_traj, seed, max_steps)?;
    segment_moments(&records, x0, m)
}

/// Frequency of paths needing at least `i` attempts, for `i = 1..=depth`.
///
/// Only paths that start above the floor and hit it are counted. Returns an
/// empty list when there are none.
pub fn attempt_survival(records: &[PathRecord], x0: u64, depth: u32) -> Vec<MomentEstimate> {
    let counted: Vec<u32> = records
        .iter()
        .filter(|r| !r.summary.capped && r.summary.attempts > 0)
        .map(|r| r.summary.attempts)
        .collect();
    if counted.is_empty() {
        return Vec::new();
    }
    let capped = capped_count(records);
    (1..=depth)
        .map(|i| {
            let mut stats = RunningStats::default();
            for &a in &counted {
                stats.push(if a >= i { 1.0 } else { 0.0 });
            }
            MomentEstimate::from_stats(Quantity::AttemptSurvival, i, x0, &stats, capped)
        })
        .collect()
}

/// One-sided `1 − α` Clopper–Pearson lower limit for `k` successes in `n`.
pub fn binomial_lower_limit(k: u64, n: u64, alpha: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k == n {
        return alpha.powf(1.0 / n as f64);
    }
    inv_beta_reg(k as f64, (n - k + 1) as f64, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Theorem,
    RiseLength,
    FallLength,
    Overshoot,
    AttemptSurvival,
}

/// What gets compared with the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// `mean + 2.576·se ≤ bound`.
    Ci99Upper,
    /// Lower one-sided 99% limit `mean − z·se ≤ bound`, i.e. the data do not
    /// reject `E ≤ bound` at level 1%.
    OneSidedMean,
    /// Clopper–Pearson lower 99% limit `≤ bound`, equivalent to the exact
    /// one-sided binomial test not rejecting `p ≤ bound`.
    OneSidedBinomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationVerdict {
    pub kind: CheckKind,
    pub rule: DecisionRule,
    pub estimate: MomentEstimate,
    pub bound: f64,
    /// The statistic the rule compares with `bound`.
    pub compared: f64,
    pub pass: bool,
    /// `bound − compared`; non-negative exactly when `pass`.
    pub slack: f64,
}

impl VerificationVerdict {
    pub fn new(kind: CheckKind, rule: DecisionRule, estimate: MomentEstimate, bound: f64) -> Self {
        let compared = match rule {
            DecisionRule::Ci99Upper => estimate.ci99_upper,
            DecisionRule::OneSidedMean => estimate.mean - z_one_sided() * estimate.std_error,
            DecisionRule::OneSidedBinomial => {
                let n = estimate.n_samples;
                let k = (estimate.mean * n as f64).round() as u64;
                binomial_lower_limit(k, n, ALPHA)
            }
        };
        let slack = bound - compared;
        VerificationVerdict {
            kind,
            rule,
            estimate,
            bound,
            compared,
            pass: slack >= 0.0,
            slack,
        }
    }
}

/// A check that was not decided because some paths hit the step cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Withheld {
    pub x0: u64,
    pub capped_paths: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub x_grid: Vec<u64>,
    pub m_list: Vec<u32>,
    pub n_traj: usize,
    pub seed: u64,
    pub max_steps: u64,
    pub epsilon: f64,
    /// Tolerance used when reporting the stay-probability witness.
    pub a2_tolerance: f64,
    /// Worker threads; `None` uses rayon's default. Never changes results.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl VerifySettings {
    pub fn new(x_grid: Vec<u64>, m_list: Vec<u32>, n_traj: usize, seed: u64) -> Self {
        VerifySettings {
            x_grid,
            m_list,
            n_traj,
            seed,
            max_steps: crate::process::DEFAULT_MAX_STEPS,
            epsilon: crate::bounds::DEFAULT_EPSILON,
            a2_tolerance: 1e-6,
            threads: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub certificate: AssumptionCertificate,
    pub bound_sets: Vec<BoundSet>,
    pub theorem_bounds: Vec<TheoremBound>,
    pub tau: Vec<MomentEstimate>,
    pub segments: Vec<SegmentMoments>,
    pub survival: Vec<MomentEstimate>,
    pub verdicts: Vec<VerificationVerdict>,
    pub withheld: Vec<Withheld>,
    pub warnings: Vec<String>,
    pub paths: Vec<PathSummary>,
    pub steps_simulated: u64,
}

impl Verification {
    pub fn all_pass(&self) -> bool {
        self.withheld.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }
}

/// Runs `f` on a pool with the requested worker count.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|_| Error::InvalidParameter {
                    name: "threads",
                    value: n as f64,
                    expected: "a usable worker count",
                })?;
            Ok(pool.install(f))
        }
    }
}

/// Certifies the model, computes all constants, simulates every start state
/// and compares the estimates with the bounds.
pub fn verify<K: Kernel + ?Sized>(
    kernel: &K,
    spec: &BenchmarkModelSpec,
    settings: &VerifySettings,
) -> Result<Verification> {
    check_paths(settings.n_traj)?;
    if settings.m_list.is_empty() || settings.m_list.contains(&0) {
        return Err(Error::InvalidParameter {
            name: "m_list",
            value: 0.0,
            expected: "a non-empty list of positive orders",
        });
    }
    let m_max = settings.m_list.iter().copied().max().unwrap_or(1);
    let certificate = certify(spec, m_max, settings.a2_tolerance, settings.epsilon)?;
    if !certificate.theorem_ready() {
        return Err(Error::AssumptionsFail(format!(
            "{:?}",
            certificate.failing_required()
        )));
    }

    let bound_sets = settings
        .m_list
        .iter()
        .map(|&m| bound_set(m, spec, settings.epsilon))
        .collect::<Result<Vec<_>>>()?;
    let mut theorem_bounds = Vec::new();
    for set in &bound_sets {
        for &x in &settings.x_grid {
            theorem_bounds.push(theorem_bound(set.m, x, set)?);
        }
    }

    let mut warnings = Vec::new();
    if settings.n_traj < LOW_SAMPLE_PATHS {
        warnings.push(format!(
            "low-sample warning: n_traj = {} is below {LOW_SAMPLE_PATHS}",
            settings.n_traj
        ));
    }

    let mut out = Verification {
        certificate,
        bound_sets,
        theorem_bounds,
        tau: Vec::new(),
        segments: Vec::new(),
        survival: Vec::new(),
        verdicts: Vec::new(),
        withheld: Vec::new(),
        warnings,
        paths: Vec::new(),
        steps_simulated: 0,
    };

    for &x0 in &settings.x_grid {
        let records = with_threads(settings.threads, || {
            simulate_records(kernel, x0, settings.n_traj, settings.seed, settings.max_steps)
        })??;
        out.steps_simulated += records.iter().map(|r| r.steps).sum::<u64>();
        out.paths.extend(records.iter().map(|r| r.summary));

        let tau = tau_moments(&records, x0, &settings.m_list)?;
        let segments = settings
            .m_list
            .iter()
            .map(|&m| segment_moments(&records, x0, m))
            .collect::<Result<Vec<_>>>()?;
        let survival = attempt_survival(&records, x0, SURVIVAL_DEPTH);

        let capped = capped_count(&records);
        if capped > 0 {
            out.withheld.push(Withheld {
                x0,
                capped_paths: capped,
                reason: format!("{capped} paths reached the step cap of {}", settings.max_steps),
            });
        } else {
            for (est, set) in tau.iter().zip(&out.bound_sets) {
                let bound = theorem_bound(set.m, x0, set)?;
                out.verdicts.push(VerificationVerdict::new(
                    CheckKind::Theorem,
                    DecisionRule::Ci99Upper,
                    est.clone(),
                    bound.value,
                ));
            }
            for (seg, set) in segments.iter().zip(&out.bound_sets) {
                let checks = [
                    (CheckKind::RiseLength, &seg.rise_length, set.m2.upper()),
                    (CheckKind::FallLength, &seg.fall_length, set.m3.upper()),
                    (CheckKind::Overshoot, &seg.overshoot, set.m4.certified.upper()),
                ];
                for (kind, stat, bound) in checks {
                    if let Some(est) = stat.estimate() {
                        out.verdicts.push(VerificationVerdict::new(
                            kind,
                            DecisionRule::OneSidedMean,
                            est.clone(),
                            bound,
                        ));
                    }
                }
            }
            let q_bar = out.certificate.q_bar.upper();
            for est in &survival {
                out.verdicts.push(VerificationVerdict::new(
                    CheckKind::AttemptSurvival,
                    DecisionRule::OneSidedBinomial,
                    est.clone(),
                    q_bar.powi(est.m as i32 - 1),
                ));
            }
        }
        out.tau.extend(tau);
        out.segments.extend(segments);
        out.survival.extend(survival);
    }
    Ok(out)
}
