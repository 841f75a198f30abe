use thiserror::Error;

/// Errors produced by the simulator and the analytic calculators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is missing, unknown or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error(
        "quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e} \
         after {evaluations} evaluations"
    )]
    NonConvergence {
        estimate: f64,
        error_bound: f64,
        evaluations: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
