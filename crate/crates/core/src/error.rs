use thiserror::Error;

/// Errors raised anywhere in the synthesis / simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("matrix is singular to working precision (pivot {pivot:e})")]
    SingularMatrix { pivot: f64 },

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { abscissa: f64 },

    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),

    #[error("Galerkin system is singular: {0}")]
    SingularGalerkinSystem(String),

    #[error("policy iteration did not converge after {iterations} iterations (last delta_abs {last_delta_abs:e}, delta_rel {last_delta_rel:e})")]
    NonConvergence {
        iterations: usize,
        last_delta_abs: f64,
        last_delta_rel: f64,
        delta_abs_history: Vec<f64>,
        delta_rel_history: Vec<f64>,
    },

    #[error("Newton iteration diverged after {iterations} steps (residual norm {residual_norm:e}){hint}")]
    NewtonDivergence {
        iterations: usize,
        residual_norm: f64,
        last_iterate: Vec<f64>,
        hint: String,
    },

    #[error("gradient inversion left the trust region: {0}")]
    Range(String),

    #[error("covariance is not symmetric positive semidefinite: {0}")]
    Covariance(String),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by invalid user input rather than numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::DimensionMismatch { .. } | Error::Parse(_) => true,
            Error::Step { source, .. } => source.is_config(),
            _ => false,
        }
    }

    /// Stable identifier for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Unsupported(_) => "unsupported",
            Error::SingularMatrix { .. } => "singular_matrix",
            Error::NotHurwitz { .. } => "not_hurwitz",
            Error::NoStabilizingSolution(_) => "no_stabilizing_solution",
            Error::SingularGalerkinSystem(_) => "singular_galerkin_system",
            Error::NonConvergence { .. } => "non_convergence",
            Error::NewtonDivergence { .. } => "newton_divergence",
            Error::Range(_) => "range",
            Error::Covariance(_) => "covariance",
            Error::Step { source, .. } => source.kind(),
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }

    /// Step index for errors raised inside a time-stepping loop.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::Step { step, .. } => Some(*step),
            _ => None,
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
