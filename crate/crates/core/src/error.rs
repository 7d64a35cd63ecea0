use std::path::PathBuf;

use crate::bohmian::Waveguide;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The field amplitude at `x` is below the node threshold, so phase
    /// derived quantities are undefined there.
    #[error("{waveguide} field has a node at x = {x}")]
    Node { x: f64, waveguide: Waveguide },

    /// |psi_m|^2 + |psi_a|^2 underflowed to zero in the evanescent tail.
    #[error("evanescent tail underflow at x = {x}")]
    TailUnderflow { x: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("coefficient extraction did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
