//! Error type shared by every module, with the process exit-code mapping
//! used by the command-line front end.

use thiserror::Error;

/// Everything that can go wrong in the laboratory.
///
/// Each variant maps to exactly one exit code (see [`Error::exit_code`]):
/// validation-type failures exit with 2, violations of the spectral
/// condition with 3 and numerical non-convergence with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or operation parameters (grid too small,
    /// infeasible cutoff margin, malformed config file, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Operands that do not fit together (dimension or metadata mismatch).
    #[error("mismatch: {0}")]
    Mismatch(String),

    /// A theorem hypothesis that the operation relies on is violated
    /// (for instance `sin α = 0` for the kernel relation).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// A mode that is deliberately not implemented (complex potentials).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A floating-point range guard tripped (exponential growth factors).
    #[error("range error: {0}")]
    Range(String),

    /// The energy sits on (or too close to) the Robin spectrum, so the
    /// boundary-value problem is not uniquely solvable.
    #[error(
        "spectral condition violated: sigma_min = {sigma_min:.3e} below threshold {threshold:.3e} ({context})"
    )]
    Spectral {
        sigma_min: f64,
        threshold: f64,
        context: String,
    },

    /// An iterative method ran out of budget.
    #[error("numerical convergence failure: {0}")]
    Convergence(String),

    /// The CGO integral equation is not solvable by the iteration at this
    /// frequency (|λ| too small for the asymptotic regime).
    #[error("asymptotic regime not reached: {0}")]
    AsymptoticRegime(String),

    /// Filesystem or serialization failure while writing artifacts.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Mismatch(_)
            | Error::Hypothesis(_)
            | Error::Unsupported(_)
            | Error::Range(_)
            | Error::Io(_) => 2,
            Error::Spectral { .. } => 3,
            Error::Convergence(_) | Error::AsymptoticRegime(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
