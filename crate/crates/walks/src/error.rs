use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("no circulant graph on {n} vertices has degree {degree} and {spectral} distinct eigenvalues")]
    EmptyClass { n: usize, degree: usize, spectral: usize },

    #[error("optimiser failed: {0}")]
    Optimiser(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
