use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the pricing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid quadrature order {order} (supported range 1..={max})")]
    InvalidOrder { order: usize, max: usize },

    #[error("moment system is ill-conditioned for order {order}, tau {tau}: {detail}")]
    Conditioning {
        order: usize,
        tau: f64,
        detail: String,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A non-finite value appeared while stepping the value surface.
    #[error("non-finite value {value} at period {period}, node {node}, guarantee level {level}")]
    NumericalFailure {
        period: usize,
        node: usize,
        level: usize,
        value: f64,
    },

    #[error(
        "fee bracket does not straddle the target {target}: price(lower) = {price_at_lower}, price(upper) = {price_at_upper}"
    )]
    NoSolution {
        target: f64,
        price_at_lower: f64,
        price_at_upper: f64,
    },

    #[error("fee iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("price is insensitive to the fee near {fee}")]
    DegenerateSensitivity { fee: f64 },
}

impl Error {
    /// Solver failures are reported separately from numerical breakdowns by the CLI.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoSolution { .. } | Error::NoConvergence { .. } | Error::DegenerateSensitivity { .. }
        )
    }

    pub fn is_numerical_failure(&self) -> bool {
        matches!(self, Error::NumericalFailure { .. } | Error::Conditioning { .. })
    }
}
