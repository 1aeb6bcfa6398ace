use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the chart domain: {0}")]
    OutOfDomain(String),

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error("parse error at column {position}: {message}")]
    Parse {
        /// 1-based column of the offending character.
        position: usize,
        message: String,
        /// Index of the partial loss whose expression failed, when known.
        partial: Option<usize>,
    },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("unknown loss '{0}'")]
    UnknownLoss(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("degenerate velocity at t = {t} (|l'| = {speed:e})")]
    DegenerateVelocity { t: f64, speed: f64 },

    #[error("weight expressions disagree at t = {t} ({w1} vs {w2}); loss is not proper here")]
    NotProperHere { t: f64, w1: f64, w2: f64 },

    #[error("loss is not proper: {0}")]
    NotProper(String),

    #[error("loss is not fair: {0}")]
    NotFair(String),

    #[error("link function is not strictly monotone: {0}")]
    NonMonotoneLink(String),

    #[error("quadrature failed; valid range is [{lo}, {hi}]")]
    QuadratureFailure { lo: f64, hi: f64 },

    #[error("value {0} outside the tabulated range of the link")]
    OutOfRange(f64),

    #[error("singular Jacobian of the graph projection at {0:?}")]
    SingularJacobian(Vec<f64>),

    #[error("principal curvature spectra disagree at {point:?}: {std:?} vs {graph:?}")]
    SpectrumMismatch {
        point: Vec<f64>,
        std: Vec<f64>,
        graph: Vec<f64>,
    },

    #[error("log-loss second fundamental form is not positive definite at {0:?}")]
    PencilSingular(Vec<f64>),

    #[error("direction must lie in the open negative orthant: {0:?}")]
    BadDirection(Vec<f64>),

    #[error("residual is not a Minkowski summand: {0}")]
    NotASummand(String),

    #[error("loss is not mixable (eta* = 0)")]
    NotMixable,

    #[error("residual loss is improper: {0}")]
    ResidualImproper(String),

    #[error("mixability routes disagree: {a} vs {b}")]
    RouteDisagreement { a: f64, b: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
