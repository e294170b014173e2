use crate::dyadic::Cube;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A decoder ran off the end of its bit source.
    #[error("bit stream exhausted at offset {offset}")]
    StreamExhausted { offset: usize },

    /// Bits at the given offset cannot be a codeword of the active scheme.
    #[error("malformed codeword at bit offset {offset}: {reason}")]
    MalformedCodeword { offset: usize, reason: String },

    /// Stream file header is not ours or not a version we read.
    #[error("bad stream header: {0}")]
    BadHeader(String),

    /// Point location gave up below the depth cap; carries the deepest
    /// straddling cube. Retriable: resampling avoids the offending point.
    #[error("no containing cube found down to depth {k_max}; deepest straddling cube {deepest:?}")]
    DepthExhausted { k_max: i32, deepest: Cube },

    /// Point location walked onto a cube classified outside the set.
    /// Retriable for samplers: the event has probability zero.
    #[error("point lies outside the region")]
    PointOutsideRegion,

    /// A region cannot soundly classify cubes (no classifier and no
    /// orthogonal-convexity declaration).
    #[error("region cannot classify cubes soundly: {0}")]
    UnsoundClassification(String),

    /// Region volume is zero, infinite, or not known well enough to use.
    #[error("region volume is zero, infinite, or unavailable")]
    BadVolume,

    /// Rejection sampling gave up (acceptance rate below threshold).
    #[error("sampling failure: acceptance rate below threshold")]
    SamplingFailure,

    /// A quadrature could not produce a usable value.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// Probability mass outside the implied-distribution table exceeds the
    /// allowed leakage.
    #[error("density mass {leakage} outside the covered range exceeds tolerance")]
    Coverage { leakage: f64 },

    /// An enumeration or table was requested over an empty range.
    #[error("empty range")]
    EmptyRange,

    /// A structured parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors that a caller with its own randomness may retry by drawing a
    /// fresh sample.
    pub fn retriable(&self) -> bool {
        matches!(
            self,
            Error::DepthExhausted { .. } | Error::PointOutsideRegion
        )
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Error {
        Error::Domain(msg.into())
    }
}
