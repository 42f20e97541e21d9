use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its contract. `field` is a dotted path
    /// such as `source.bin_width`.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// An input lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A statistic was requested over an empty population.
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// A run completed but produced nothing usable (e.g. zero sifted bits).
    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("malformed record on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}
