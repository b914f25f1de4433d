//! Error type shared by all core modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("duplicate matrix entry at ({mu:?}, {nu:?})")]
    DuplicateEntry { mu: Vec<i64>, nu: Vec<i64> },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("box endpoints must lie in (1/2)Z and satisfy lo < hi: {0}")]
    BadBox(String),

    #[error("samples per unit must be an even integer >= 2, got {0}")]
    BadSampleRate(u32),

    #[error("grid is not partitioned by unit cubes (endpoints must be half-odd integers)")]
    NotCubeAligned,

    #[error("incommensurate grids: {0}")]
    Incommensurate(String),

    #[error("spectrum support exceeds the multiplier grid: {0}")]
    SpectrumOutOfRange(String),

    #[error("window too small: no lattice translate of the bump meets it")]
    WindowTooSmall,

    #[error("rank unstable under grid refinement: rank {rank_m} at m={m}, rank {rank_2m} at 2m")]
    RankUnstable { m: u32, rank_m: usize, rank_2m: usize },

    #[error("instance too large for the dense search oracle: support size {got} exceeds {max}")]
    InstanceTooLarge { got: usize, max: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inverse transform of the window profile degenerates on Q (c0 = {0:.3e})")]
    DegenerateKit(f64),

    #[error("correlation radius {got} smaller than the overlap range {needed}")]
    RadiusTooSmall { got: i64, needed: i64 },

    #[error("tolerance unreachable within index cap {cap}: achieved {achieved:.3e}")]
    TolUnreachable { achieved: f64, cap: i64 },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("sequence must have unit l2 norm, got {0}")]
    NotUnitNorm(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
