//! Error type shared across the crate.

/// Errors produced by the analytical and simulation operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An order-statistic or pmf index is out of range.
    #[error("index out of range: {0}")]
    Index(String),

    /// The closed-form path would lose too much precision; use the
    /// quadrature variant instead.
    #[error("overflow guard: {0}")]
    OverflowGuard(String),

    /// Adaptive quadrature stopped short of the requested tolerance.
    #[error("quadrature did not converge: value {value}, error estimate {error_estimate}")]
    QuadratureNonConvergence { value: f64, error_estimate: f64 },

    /// The Chernoff minimizer θ* ≥ 0 does not exist for these inputs.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A probability mass function failed validation.
    #[error("invalid distribution: {0}")]
    Distribution(String),

    /// A simulation configuration is inconsistent with the system size.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
