//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("steady-state solver did not converge: {0}")]
    NoConvergence(String),

    #[error("truncation leak {leak:.3e} exceeds tolerance {tol:.3e} at dim {dim}; enlarge the Fock dimension")]
    TruncationLeak { leak: f64, tol: f64, dim: usize },

    #[error("density matrix violates {0}")]
    InvalidState(String),

    #[error("integrator step size underflow at t = {t:.6e} s (h = {h:.3e})")]
    StepFailure { t: f64, h: f64 },

    #[error("no phase transition: drive {g:.6e} does not exceed loss {kappa:.6e}")]
    NoTransition { g: f64, kappa: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("amplifier quadrature variance {0} below the vacuum limit 1/4")]
    InvalidNoise(f64),

    #[error("target moments infeasible for a displaced Gaussian field: mean {mean:.6e}, variance {var:.6e}")]
    MomentInfeasible { mean: f64, var: f64 },

    #[error("flux point too close to the half-quantum singularity: |cos F| = {0:.3e}")]
    FluxSingularity(f64),

    #[error("eigenmode root not bracketed in (0, pi/2)")]
    RootNotBracketed,

    #[error("resonance fit diverged: {0}")]
    FitDiverged(String),

    #[error("insufficient data span: {0}")]
    InsufficientSpan(String),

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("trace file shape error: {0}")]
    ShapeError(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("missing configuration key `{0}`")]
    MissingKey(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code per the CLI contract: 1 domain error, 2 usage error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ParseError { .. }
            | Error::UnknownKey(_)
            | Error::MissingKey(_)
            | Error::InvalidParameter(_) => 2,
            _ => 1,
        }
    }

    /// Short stable identifier for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid_dimension",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NoConvergence(_) => "no_convergence",
            Error::TruncationLeak { .. } => "truncation_leak",
            Error::InvalidState(_) => "invalid_state",
            Error::StepFailure { .. } => "step_failure",
            Error::NoTransition { .. } => "no_transition",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::InvalidNoise(_) => "invalid_noise",
            Error::MomentInfeasible { .. } => "moment_infeasible",
            Error::FluxSingularity(_) => "flux_singularity",
            Error::RootNotBracketed => "root_not_bracketed",
            Error::FitDiverged(_) => "fit_diverged",
            Error::InsufficientSpan(_) => "insufficient_span",
            Error::ParseError { .. } => "parse_error",
            Error::ShapeError(_) => "shape_error",
            Error::UnknownKey(_) => "unknown_key",
            Error::MissingKey(_) => "missing_key",
            Error::Io(_) => "io",
        }
    }
}
