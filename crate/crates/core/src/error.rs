use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported geometry: 2L = {two_l} is an integer (within 1e-9); only non-integer 2L is handled")]
    UnsupportedGeometry { two_l: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("energy {omega} coincides with threshold omega_{k} = {threshold}; use the near-threshold path")]
    ThresholdCollision { omega: f64, k: usize, threshold: f64 },

    #[error("eps = {eps} outside (0, eps0] with eps0 = {eps0} for threshold {n}")]
    EpsOutOfRange { eps: f64, eps0: f64, n: usize },

    #[error("wave family does not match the energy regime: {0}")]
    RegimeMismatch(String),

    #[error("quadrature not converged: doubling nodes changed the result by {change:.3e}")]
    QuadratureNotConverged { change: f64 },

    #[error("ill-conditioned boundary matching (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("insufficient extraction distance: remainder {remainder:.3e} above tolerance {tol:.1e}")]
    InsufficientDomain { remainder: f64, tol: f64 },

    #[error("transverse truncation too small: edge-mode amplitude {edge:.3e} above {tol:.1e}")]
    TruncationTooSmall { edge: f64, tol: f64 },

    #[error("moment system rank {rank} < {needed}; singular values {spectrum:?}")]
    RankDeficient {
        rank: usize,
        needed: usize,
        spectrum: Vec<f64>,
    },

    #[error("fixed-point iteration is not contracting (step norms {steps:?}); try a smaller eps")]
    NonContraction { steps: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Input problems (as opposed to numerical failures of a solve).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedGeometry { .. }
                | Error::InvalidParameter(_)
                | Error::ThresholdCollision { .. }
                | Error::EpsOutOfRange { .. }
                | Error::RegimeMismatch(_)
                | Error::Json(_)
        )
    }
}
