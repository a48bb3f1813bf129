use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("size cap exceeded: {what} = {size} > {cap}")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("time {t} outside [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },
    #[error("region mismatch: {0}")]
    RegionMismatch(String),
    #[error("function has zero spectral mass")]
    ZeroFunction,
    #[error("sets overlap: {0}")]
    Overlap(String),
    #[error("no tabulated radius reaches l = {0}")]
    NotReached(u64),
    #[error("integral head diverges for gamma = {0} (need gamma < 1)")]
    DivergentHead(f64),
    #[error("alpha = {0} outside [0, 21/68)")]
    OutOfDomain(f64),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("invalid annulus structure: {0}")]
    InvalidStructure(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
