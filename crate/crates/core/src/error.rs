use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the library. Degenerate but well-defined outcomes
/// (a non-regular moment matrix found by `regularity_check`, a failing
/// residual) are values, not errors.
#[derive(Debug, Error)]
pub enum MopError {
    #[error("spec error: {0}")]
    Spec(String),

    #[error("regularity failure at n = {n}: {detail}")]
    Regularity { n: usize, detail: String },

    #[error("quadrature did not converge for {what}: last estimate {last:e}, previous {previous:e}")]
    Quadrature {
        what: String,
        last: f64,
        previous: f64,
    },

    #[error("weight is singular at the endpoint z = {0}")]
    EndpointSingularity(Complex64),

    #[error("integration path error: {0}")]
    Path(String),

    #[error("z = {z} is within {distance:e} of the support")]
    Proximity { z: Complex64, distance: f64 },

    #[error("out of range: {0}")]
    Range(String),

    #[error("missing ingredient: {0}")]
    Ingredient(String),

    #[error("degenerate lattice at n = {n}: bracket matrix is singular")]
    Degenerate { n: usize },

    #[error("boundary value extrapolation failed: {0}")]
    Boundary(String),

    #[error("singular matrix in {0}")]
    Singular(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, MopError>;
