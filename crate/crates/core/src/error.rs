use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Divergence of an exponential moment is not an error; see
/// [`crate::exact::FkOutcome`].
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of a function (non-finite input,
    /// `t` too small for an iterated logarithm, `θ` past the MGF pole, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The truncated lattice window cannot certify the requested accuracy.
    #[error("window too small: {0}")]
    WindowTooSmall(String),

    /// Invalid configuration or parameters.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Short machine-readable tag used by the CLI error stream.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Numeric(_) => "numeric",
            Error::WindowTooSmall(_) => "window_too_small",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
