use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arm: {0}")]
    InvalidArm(String),

    #[error("invalid parameter `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("Fourier decomposition did not converge (residual {residual:.3e} with {grid} points)")]
    DecompositionFailure { residual: f64, grid: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("missing context for {channel}: {what}")]
    MissingContext {
        channel: &'static str,
        what: &'static str,
    },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("insufficient periodicity: found {peaks} correlation peaks")]
    InsufficientPeriodicity { peaks: usize },

    #[error("ill-conditioned lattice: vectors are {angle_deg:.2} degrees apart")]
    IllConditioned { angle_deg: f64 },

    #[error(
        "ambiguous loop assignment: modulations {first:.4} and {second:.4} differ by less than 10%"
    )]
    AmbiguousAssignment { first: f64, second: f64 },

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DecompositionFailure { .. }
                | Error::NumericalFailure(_)
                | Error::Divergence(_)
                | Error::Truncation(_)
                | Error::InsufficientPeriodicity { .. }
                | Error::IllConditioned { .. }
                | Error::AmbiguousAssignment { .. }
        )
    }
}
