use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its invariant. `field` is the dotted path.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    /// Malformed configuration or genome JSON.
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    /// An argument lies outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Genome or network dimensions disagree.
    #[error("codec error: {0}")]
    Codec(String),

    /// The evaluation harness was driven with inconsistent inputs.
    #[error("harness error: {0}")]
    Harness(String),

    /// Malformed or incomplete CSV. `row` is 1-based and counts the header.
    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: usize, message: String },

    /// A well-formed CSV that lacks or repeats sweep cells.
    #[error("incomplete history: {0}")]
    Incomplete(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
