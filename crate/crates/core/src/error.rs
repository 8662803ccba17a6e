use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("grid must be at least 2x2, got {rows}x{cols}")]
    InvalidGrid { rows: usize, cols: usize },

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("renormalized energy nu = {nu} is outside the domain of this operation ({expected})")]
    WrongRegime { nu: f64, expected: &'static str },

    #[error("branch of x(y) is ambiguous at nu = {nu}: both roots have unit modulus")]
    AmbiguousBranch { nu: f64 },

    #[error("point x = {re}{im:+}i lies on a branch cut of y(x)")]
    OnBranchCut { re: f64, im: f64 },

    #[error("quadrature did not reach tolerance {requested:e}: achieved {achieved:e} with {panels} panels")]
    QuadratureFailure {
        achieved: f64,
        requested: f64,
        panels: usize,
    },

    #[error("no discrete eigenvalue: |lambda/mu| = {ratio} is not below the threshold {threshold}")]
    NoDiscreteEigenvalue { ratio: f64, threshold: f64 },

    #[error("root bracket could not be established: {0}")]
    BracketFailure(String),

    #[error("nu is not an eigenvalue: |c1 - f00| = {mismatch:e}")]
    NotAnEigenvalue { mismatch: f64 },

    #[error("interior system is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
