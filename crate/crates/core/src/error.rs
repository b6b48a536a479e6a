use thiserror::Error;

/// Error type shared by all toolkit modules.
///
/// The CLI maps `Validation`/`Io` to exit code 1 and every numerical guard
/// (`SizeLimit`, `CostGuard`, `Jammed`, `Inadmissible`, `Degenerate`,
/// `FitUndetermined`) to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("size limit exceeded: {what} = {got} > cap {cap}")]
    SizeLimit {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("cost guard tripped: {0}")]
    CostGuard(String),

    #[error("jammed density: rho*sigma = {0} >= 1")]
    Jammed(f64),

    #[error("inadmissible constants: {0}")]
    Inadmissible(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("fit undetermined: {0}")]
    FitUndetermined(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that come from a numerical guard rather than bad
    /// arguments (the CLI reports these with a distinct exit code).
    pub fn is_guard(&self) -> bool {
        matches!(
            self,
            Error::SizeLimit { .. }
                | Error::CostGuard(_)
                | Error::Jammed(_)
                | Error::Inadmissible(_)
                | Error::Degenerate(_)
                | Error::FitUndetermined(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
