//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 2, got {n}")]
    InvalidDimension { n: usize },

    #[error("kernel evaluated on its singular set ({what})")]
    SingularPoint { what: &'static str },

    #[error("point outside the closed half space (x_n = {xn}, y_n = {yn})")]
    Domain { xn: f64, yn: f64 },

    #[error("derivative order {m} unsupported (only |alpha|+|beta| in {{1,2}})")]
    UnsupportedOrder { m: usize },

    #[error("decay exponent a = {a} violates the hypothesis a > {required}")]
    DecayHypothesis { a: f64, required: f64 },

    #[error(
        "quadrature did not reach tolerance {tol:.3e} after {refinements} refinements \
         (last estimate {estimate:.3e})"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        tol: f64,
        refinements: u32,
    },

    #[error("fixed-point iteration diverged (ratio {ratio:.3} at amplitude {eps:.3e})")]
    IterationDiverged { ratio: f64, eps: f64 },

    #[error("force has nonzero mean {integral:.3e}, exceeding tolerance {tol:.3e}")]
    NonzeroMeanForce { integral: f64, tol: f64 },

    #[error("root search failed: {reason}")]
    RootSearch { reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
