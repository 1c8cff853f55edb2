use thiserror::Error;

/// Errors raised while building a model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("non-finite {what}: {value}")]
    NonFinite { what: String, value: f64 },
    #[error("invalid bounds [{lower}, {upper}] for variable `{name}`")]
    InvalidBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("constraint `{constraint}` references unknown variable #{var}")]
    UnknownVariable { constraint: String, var: usize },
}

/// Errors raised while reading MPS text.
#[derive(Debug, Error)]
pub enum MpsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("relative gap must be >= 0, got {0}")]
    NegativeGap(f64),
    #[error("tolerance `{0}` must be > 0")]
    NonPositiveTolerance(&'static str),
}
