use thiserror::Error;

pub type Result<T> = std::result::Result<T, AnalyticsError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("input matrix has no rows or no features")]
    EmptyMatrix,
    #[error("n_clusters={k} must be within 1..={n}")]
    KTooLarge { k: usize, n: usize },
    #[error("n_components={requested} must be within 1..={max}")]
    TooManyComponents { requested: usize, max: usize },
    #[error("exactly one of {first} / {second} must be given")]
    BothOrNeitherStopRule {
        first: &'static str,
        second: &'static str,
    },
    #[error("series of length {len} is too short (need at least 2)")]
    TooShort { len: usize },
    #[error("n_bkps={n_bkps} is impossible for a series of length {len}")]
    TooManyBreakpoints { n_bkps: usize, len: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("feature mismatch: model expects {expected:?}, got {found:?}")]
    FeatureMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("metric {metric} requires integer label values")]
    NotLabels { metric: &'static str },
    #[error("cv_folds={folds} must be within 2..={n}")]
    FoldTooSmall { folds: usize, n: usize },
    #[error("parameter grid for '{0}' has no values")]
    EmptyGrid(String),
    #[error("invalid parameter '{name}': {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("model has no attribute '{0}'")]
    UnknownModelAttribute(String),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("model file i/o: {0}")]
    Io(String),
    #[error("model file version {found} is not supported")]
    VersionMismatch { found: u64 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
}
