//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Precondition violation on an algebraic gas relation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The enthalpy argument of the density closure left the physical range.
    #[error("cavitation: enthalpy argument {argument:.6e} is not positive (state beyond vacuum)")]
    Cavitation { argument: f64 },

    /// No subsonic uniform state carries the requested mass flux.
    #[error("choking: mass flux {m0:.6e} is at or above the sonic flux limit {limit:.6e}")]
    Choked { m0: f64, limit: f64 },

    /// Profile construction parameters violate a declared bound.
    #[error("profile construction error: {0}")]
    Profile(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    /// A coordinate or station lies outside the computational domain.
    #[error("range error: {0}")]
    Range(String),

    /// Evaluation of a tabulated field outside its grid.
    #[error("extrapolation error: {0}")]
    Extrapolation(String),

    /// An iterative solve failed to reach its tolerance.
    #[error("convergence error in {stage}: {detail} (history tail: {history:?})")]
    Convergence {
        stage: &'static str,
        detail: String,
        history: Vec<f64>,
    },

    /// The subsonic truncation was still active at convergence.
    #[error(
        "subsonicity error: truncation active on {cells} cells at convergence \
         (epsilon too large for this scenario)"
    )]
    Subsonicity { cells: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// API misuse, e.g. mixing states from different meshes.
    #[error("usage error: {0}")]
    Usage(String),

    /// Scenario file problems; carries every violation found, not just the first.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
