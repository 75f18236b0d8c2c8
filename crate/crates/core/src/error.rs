use alloc::string::String;

pub type Result<T, E = WaxError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WaxError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("{context}: expected shape {expected:?}, found {found:?}")]
    DimensionMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{context}: {detail}")]
    InvalidDimension { context: &'static str, detail: &'static str },
    #[error("{context}: rank deficient (smallest singular value {smin:e}, largest {smax:e})")]
    RankDeficient { context: &'static str, smin: f64, smax: f64 },
    #[error("polar projection undefined for singular block (smallest singular value {smin:e}, largest {smax:e})")]
    DegenerateProjection { smin: f64, smax: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
