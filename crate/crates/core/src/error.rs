use thiserror::Error;

/// Errors raised across the simulation, analysis and bound modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distribution-invalid: {0}")]
    DistributionInvalid(String),

    #[error("invalid-parameter: {name} = {value} (expected {expected})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid-q: {0} is not in (0, 1)")]
    InvalidQ(f64),

    #[error("index-out-of-range: index {index} for sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unterminated-run: the run starting at index {start} reaches the end of the trajectory")]
    UnterminatedRun { start: usize },

    #[error("not-hit: trajectory never reached the floor")]
    NotHit,

    #[error("at-floor: trajectory starts inside the floor set, there are no attempts")]
    StartsAtFloor,

    #[error("all-capped: every one of {paths} paths hit the step cap")]
    AllCapped { paths: usize },

    #[error("too-few-paths: need at least {min}, got {got}")]
    TooFewPaths { min: usize, got: usize },

    #[error("assumptions-fail: {0}")]
    AssumptionsFail(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
