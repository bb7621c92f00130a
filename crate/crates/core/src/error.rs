use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quantization level must be positive")]
    ZeroLevel,

    #[error("level N = {0} too small for this construction (need N >= {1})")]
    LevelTooSmall(usize, usize),

    #[error("matrix [[{0}, {1}], [{2}, {3}]] has determinant {4}, expected 1")]
    NotUnimodular(i64, i64, i64, i64, i64),

    #[error("integer overflow while multiplying SL2 matrices")]
    Overflow,

    #[error("basis is not orthonormal: Gram entry ({row}, {col}) = {re:+.3e}{im:+.3e}i")]
    NonOrthonormal { row: usize, col: usize, re: f64, im: f64 },

    #[error("basis vector {index} has length {len}, expected {expected}")]
    DimensionMismatch { index: usize, len: usize, expected: usize },

    #[error("Gauss prefactor magnitude {magnitude} deviates from 1/sqrt({n})")]
    GaussPrefactor { n: usize, magnitude: f64 },

    #[error("operator is not unitary: ||U*U - I||_F = {0:.3e}")]
    NotUnitary(f64),

    #[error("states belong to different test families ({0} vs {1})")]
    FamilyMismatch(String, String),

    #[error("state is not normalized: value on the constant observable is {0}")]
    NotNormalized(String),

    #[error("invalid convex weights: {0}")]
    InvalidWeights(String),

    #[error("target is not exposed: it lies within {margin:.3e} of the convex hull of the cloud")]
    NotExposed { margin: f64 },

    #[error("degenerate bound: ((1 - delta) c - a) / ||L|| = {0}")]
    DegenerateBound(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("{what} = {value} is not within 1e-6 of an integer")]
    NonIntegral { what: String, value: String },

    #[error("spin decomposition requires the level to be divisible by 4, got {0}")]
    LevelNotDivisibleByFour(u64),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("eigendecomposition did not converge")]
    Eigen,

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("nothing to report")]
    EmptyReport,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
