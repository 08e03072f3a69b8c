use thiserror::Error;

/// Errors raised by the algorithms in this crate.
#[derive(Error, Debug)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(String),

    #[error("failed to read {path}: {message}")]
    Io { path: String, message: String },

    #[error("target column `{0}` not present in header")]
    MissingColumn(String),

    #[error("target column has {0} distinct values, expected exactly 2")]
    NonBinaryTarget(usize),

    #[error("positive label `{0}` does not occur in the target column")]
    UnknownLabel(String),

    #[error("no rows left after dropping missing values")]
    EmptyAfterCleaning,

    #[error("a class has {found} rows, at least {needed} are required")]
    TooFewPerClass { found: usize, needed: usize },

    #[error("only one class is present")]
    SingleClass,

    #[error("k = {k} is too large for {available} candidate neighbours")]
    KTooLarge { k: usize, available: usize },

    #[error("k must be at least 1")]
    KZero,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("borderline oversampling found no DANGER minority rows")]
    EmptyDangerSet,

    #[error("safe-level oversampling found no minority row with safe level above 0.5")]
    NoSafeAnchors,

    #[error("every minority row was classified as noise")]
    NoValidAnchors,

    #[error("no feature survived filtering")]
    NoFeaturesSelected,

    #[error("at least 3 observations are required, got {0}")]
    TooFewObservations(usize),

    #[error("dataset has {0} rows, above the neighbourhood cutoff")]
    TooLarge(usize),

    #[error("{found} profiles cannot form {k} clusters")]
    TooFewProfiles { found: usize, k: usize },

    #[error("statistical test needs at least {needed} groups or treatments, got {found}")]
    TooFewGroups { found: usize, needed: usize },

    #[error("group {0} is empty")]
    EmptyGroup(usize),

    #[error("blocks have unequal length")]
    UnbalancedBlocks,

    #[error("validation split contains a single class")]
    SingleClassValidation,

    #[error("input is constant, the statistic is undefined")]
    ConstantInput,

    #[error("model pool is empty")]
    EmptyPool,
}

pub type Result<T> = std::result::Result<T, Error>;
