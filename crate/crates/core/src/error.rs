use thiserror::Error;

/// Errors produced by factorizations, solvers and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    /// A triangular factor has an exactly zero diagonal entry.
    #[error("singular triangular factor {block} at diagonal index {index}")]
    SingularTriangular { block: &'static str, index: usize },

    #[error("eigenvalue {value} does not match the expected spectrum (nearest expected {expected}, deviation {deviation:e})")]
    SpectrumMismatch { value: f64, expected: f64, deviation: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!(
            "{what}: length {got}, expected {want}"
        )));
    }
    Ok(())
}
