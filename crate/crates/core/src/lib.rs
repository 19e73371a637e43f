//! Simulation, path analysis and polynomial-moment bound verification for
//! Markov-up processes on the non-negative integers.
//!
//! A Markov-up process is Markov while it rises, but while it falls its next
//! step may depend on the whole current falling segment. The crate provides
//!
//! - [`process`]: the falling-segment window, the [`Kernel`] contract and the
//!   path simulator;
//! - [`models`]: a parametric benchmark family and its assumption certificate;
//! - [`paths`]: the stopping times `ζ, ξ, χ, τ` and the rise/fall
//!   decomposition of a path;
//! - [`bounds`]: certified series for the segment constants and the bound on
//!   `E_x τ^m`;
//! - [`montecarlo`]: deterministic parallel estimation and one-sided checks;
//! - [`report`]: the JSON report and CSV row types.

pub mod bounds;
pub mod error;
pub mod models;
pub mod montecarlo;
pub mod paths;
pub mod process;
pub mod report;
pub mod rng;

pub use bounds::{
    bound_set, jump_moment, lemma2_sum, lemma3_bound, power_series, q_bar, theorem_bound,
    BoundSet, Lemma3Bound, SeriesValue, TheoremBound, DEFAULT_EPSILON,
};
pub use error::{Error, Result};
pub use models::{
    build_benchmark, certify, kappa_at, Assumption, AssumptionCertificate, AssumptionStatus,
    BenchmarkKernel, BenchmarkModelSpec, DescentKernel, KappaSpec,
};
pub use montecarlo::{
    estimate_segment_moments, estimate_tau_moments, verify, MomentEstimate, SegmentMoments,
    Verification, VerificationVerdict, VerifySettings,
};
pub use paths::{chi_at, decompose_attempts, tau_of, xi_at, zeta_at, AttemptDecomposition};
pub use process::{
    sample_step, simulate_path, window_update, FallWindow, Kernel, StepDistribution, StopReason,
    Trajectory, DEFAULT_MAX_STEPS,
};
pub use report::Report;
