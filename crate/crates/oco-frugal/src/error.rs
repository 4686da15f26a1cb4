//! Error types shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All recoverable failure modes of the library.
///
/// Contract violations that can only arise from caller bugs (such as
/// evaluating a function outside its `[0,1]` domain) panic instead; see the
/// individual operation docs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received an argument outside its stated range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A numeric input was NaN/infinite where a finite value is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A closed-form expression is undefined at the given parameters
    /// (negative discriminant or non-positive root).
    #[error("formula invalid: {0}")]
    FormulaInvalid(String),

    /// An input violated one of the standing assumptions (A1-A4) that the
    /// algorithm's guarantees rely on.
    #[error("assumption violated: {0}")]
    Assumption(String),

    /// The stale information oracle has nothing to report at t = 1; the
    /// caller must apply the x1 = x0 convention.
    #[error("no information available at t = 1 in the stale setting")]
    NoInformation,

    /// Paired sequences whose lengths must agree did not.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// A chart was requested for a series with no data rows.
    #[error("missing series: no rows for setting `{0}`")]
    MissingSeries(String),

    /// Filesystem failure, tagged with the path involved.
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed configuration file or CSV document.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Convenience constructor for [`Error::Io`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
