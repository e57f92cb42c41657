use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Projection onto the sphere is not unique at the origin.
    #[error("degenerate projection: zero vector at vertices {vertices:?}")]
    DegenerateProjection { vertices: Vec<usize> },

    /// Chromaticity is undefined for black pixels.
    #[error("degenerate chromaticity: black pixels at {pixels:?}")]
    DegenerateChromaticity { pixels: Vec<usize> },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
