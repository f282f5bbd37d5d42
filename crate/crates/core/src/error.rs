use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |a_jk - conj(a_kj)| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("state is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("dimension {dim} does not factor as {dim_system} x {dim_env}")]
    NotFactorizable {
        dim: usize,
        dim_system: usize,
        dim_env: usize,
    },

    #[error("eigendecomposition did not converge: residual {residual:e}")]
    EigenConvergence { residual: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("value {value} lies outside the grid range [{min}, {max}]")]
    OutsideGrid { value: f64, min: f64, max: f64 },

    #[error("classical trajectory left the grid at t = {time}")]
    TrajectoryExited { time: f64 },

    #[error("qubit parameters violate |alpha| <= sqrt(p(1-p)) by {margin:e}")]
    InvalidQubit { margin: f64 },

    #[error("environment model rejected {rejected} of {steps} steps (more than 1%)")]
    TooManyRejections { rejected: usize, steps: usize },

    #[error("oscillator denominator vanishes at mode frequency {omega_l} (undamped resonance)")]
    ResonanceSingularity { omega_l: f64 },

    #[error("expected count {expected:e} exceeds the counter range")]
    CountOverflow { expected: f64 },

    #[error("double-well path diverged (|x| > 10) at step {step}")]
    Diverged { step: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
