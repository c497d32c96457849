use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical or structural precondition on the inputs failed.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The operation does not apply to this probe-source variant.
    #[error("wrong source variant: expected {expected}, got {got}")]
    WrongSource { expected: &'static str, got: &'static str },
    #[error("background subtraction is non-physical at {freq_hz} Hz (floor {floor_db} dB >= trace {trace_db} dB)")]
    NonPhysicalSubtraction {
        freq_hz: f64,
        floor_db: f64,
        trace_db: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
