use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("point outside domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite value {value} at node {index} ({coords:?})")]
    Evaluation {
        index: usize,
        coords: Vec<f64>,
        value: f64,
    },

    #[error("degenerate weight: {0}")]
    Weight(String),

    #[error("finite-difference stencil leaves the domain at {coords:?} (h = {h})")]
    Stencil { coords: Vec<f64>, h: f64 },

    #[error("kernel evaluated at coincident points")]
    SingularPoint,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("density is not mean-zero: measured mean {mean:e} exceeds tolerance {tol:e}")]
    NotMeanZero { mean: f64, tol: f64 },

    #[error("beta = {beta} outside the admissible open interval ({lo}, {hi})")]
    BetaOutOfRange { beta: f64, lo: f64, hi: f64 },

    #[error(
        "eta = {eta} below beta + gamma - 1 = {min}; this lower bound is also necessary for the weighted estimate"
    )]
    EtaTooSmall { eta: f64, min: f64 },

    #[error("transported weight exponent {mu} is not in A_{p}: internal consistency failure")]
    ApViolation { mu: f64, p: f64 },

    #[error("Hardy constant degenerates: p*kappa - p + 1 = 0 (p = {p}, kappa = {kappa})")]
    DegenerateConstant { p: f64, kappa: f64 },

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
