use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate link: Rician factor and scattered-path count are both zero ({0})")]
    DegenerateLink(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix in {context} (condition number estimate {condition:.3e})")]
    Singular { context: &'static str, condition: f64 },

    #[error("zero channel: {0}")]
    ZeroChannel(&'static str),

    #[error("could not place a UE outside all obstacles after {0} attempts")]
    PlacementFailed(usize),

    #[error("SDP did not converge in {iterations} iterations (primal {primal:.3e}, dual {dual:.3e})")]
    SdpNotConverged {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("RIS profile has a zero direct-path coefficient")]
    ZeroReference,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
