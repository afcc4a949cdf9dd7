use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    /// The integrator produced a non-finite state.
    #[error("numeric abort at t = {t:.6} s: {detail}")]
    NumericAbort { t: f64, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("trace schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("no contact: every torque sample is below the {floor} N·m floor")]
    NoContact { floor: f64 },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
