//! Error type shared across the crate.

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter point does not match the model family it was used with.
    #[error("parameter/family mismatch: {0}")]
    FamilyMismatch(String),
    /// A dataset does not match the model it was paired with.
    #[error("dataset/model mismatch: {0}")]
    DataMismatch(String),
    /// An argument is outside its legal range.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    /// The normal-equation matrix for a least-squares fit is singular.
    #[error("singular normal matrix for truncation order {order}")]
    SingularNormalMatrix { order: usize },
    /// Quadrature failed to stabilize within the configured refinement budget.
    #[error("quadrature did not converge after {refinements} refinements (last delta {last_delta})")]
    QuadratureNonConvergence { refinements: usize, last_delta: f64 },
    /// An independence sampler accepted nothing after burn-in.
    #[error("sampler accepted 0 of {proposals} proposals after burn-in (acceptance in burn-in {burnin_rate}); prior/schedule likely misconfigured")]
    ZeroAcceptance { proposals: usize, burnin_rate: f64 },
    /// Rate-exponent fit had fewer than three usable grid points.
    #[error("rate fit needs at least 3 positive responses, had {usable}")]
    InsufficientFitPoints { usable: usize },
    /// Too many replicates of a rate study failed.
    #[error("rate study failed: {failed} of {total} replicates errored (> 5%)")]
    StudyFailure { failed: usize, total: usize },
}
