//! Matrix orthogonal polynomials from matrix Pearson weights: moments,
//! block Gauss–Borel factorization, Riemann–Hilbert data and the
//! identities they satisfy.

pub mod builtin;
pub mod diffeq;
pub mod error;
pub mod evaluation;
pub mod factorization;
pub mod moments;
pub mod painleve;
pub mod pipeline;
pub mod quad;
pub mod report;
pub mod specfile;
pub mod structure;
pub mod suites;
pub mod types;
pub mod weights;

pub use error::{MopError, Result};
pub use pipeline::{CauchyConfig, Pipeline};
pub use types::{c64, CMat, MatrixPolynomial, ScalarPoly, Side, C64};
