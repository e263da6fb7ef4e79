use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Every tail mass of the mixture is below the representable threshold,
    /// so the estimator would silently return zero.
    #[error(
        "degenerate proposal for symbol {symbol}: largest tail mass has ln P = {max_ln_mass:.3}"
    )]
    DegenerateProposal { symbol: usize, max_ln_mass: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
