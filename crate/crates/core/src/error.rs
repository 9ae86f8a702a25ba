use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("bracket error: {0}")]
    Bracket(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("non-finite integrand value {value} at x = ({:.6}, {:.6}, {:.6}, {:.6})", at[0], at[1], at[2], at[3])]
    NonFiniteSample { value: f64, at: [f64; 4] },
    #[error("model error: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
