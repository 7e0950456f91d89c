use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ratio b_{index} = {value} must be at least 2")]
    RatioTooSmall { index: u64, value: i128 },
    #[error("ratio b_{index} does not fit in 64 bits")]
    RatioOverflow { index: u64 },
    #[error("digit c_{index} = {digit} is outside [0, b_{index} - 1 = {max}]")]
    DigitOutOfRange { index: u64, digit: u64, max: u64 },
    #[error("point {0} is not in [0, 1)")]
    PointOutOfRange(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("construction hypothesis not met: {0}")]
    Hypothesis(String),
    #[error("malformed spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
