use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MoranError {
    #[error("invalid model parameter: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("no isolated equilibrium: s = u = 0 makes every point an equilibrium")]
    NoIsolatedEquilibrium,
}

pub type Result<T> = std::result::Result<T, MoranError>;
