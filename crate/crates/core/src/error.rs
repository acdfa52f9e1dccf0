use thiserror::Error;

pub type Result<T> = std::result::Result<T, InpaintError>;

#[derive(Debug, Error)]
pub enum InpaintError {
    #[error("mask has no nonzero pixel")]
    EmptyMask,

    #[error("inpainting region pixel ({row}, {col}) lies within {margin} pixels of the image border")]
    MaskTouchesBorder { row: usize, col: usize, margin: usize },

    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("SOR did not converge after {iters} sweeps (last update {last_update:e})")]
    SorDidNotConverge { iters: usize, last_update: f64 },

    #[error("non-finite energy or gradient at iteration {iter}")]
    NonFiniteEnergy { iter: usize },

    #[error("non-finite pixel values at iteration {iter}")]
    NonFiniteValues { iter: usize },

    #[error("line search found no decreasing step above {t_min:e}")]
    StepUnderflow { t_min: f64 },

    #[error("relative condition number undefined at zero energy")]
    ZeroEnergy,

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("image is identically zero")]
    AllZeroImage,

    #[error("expansion factor {0} is below 2")]
    FactorTooSmall(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed trace file: {0}")]
    MalformedTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
