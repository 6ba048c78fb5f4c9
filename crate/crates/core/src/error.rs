use thiserror::Error;

/// Errors raised while building laws, solving for survival curves or
/// running simulations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The stopping probability is 0 or 1 (within tolerance), so the sum
    /// never stops or never accumulates a failed step.
    #[error("degenerate law: stopping probability q = {q} is not inside (0, 1)")]
    DegenerateLaw { q: f64 },

    #[error("moment is not finite: {0}")]
    NonfiniteMoment(String),

    #[error("variance formula gave a negative value ({0}); step moments are inconsistent")]
    NegativeVariance(f64),

    #[error("failure sub-distribution has an atom of mass {mass} at zero")]
    AtomAtZero { mass: f64 },

    #[error("grid too coarse: survival increases by {excess} at t = {t}")]
    GridTooCoarse { t: f64, excess: f64 },

    #[error("Laplace inversion unstable at t = {t}: orders {low} and {high} differ by {diff}")]
    InversionUnstable {
        t: f64,
        low: usize,
        high: usize,
        diff: f64,
    },

    #[error("queue is not stable: rho = {rho} >= 1")]
    StabilityViolation { rho: f64 },

    #[error("replication {replication} exceeded {limit} steps without stopping")]
    RunawayStop { replication: u64, limit: u64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
