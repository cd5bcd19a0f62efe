use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("empty table: {0}")]
    EmptyTable(String),

    #[error("non-numeric cell at row {row}, column {column}")]
    NonNumericCell { row: usize, column: String },

    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteCell { row: usize, column: String },

    #[error("duplicate subject id '{0}'")]
    DuplicateSubjectId(String),

    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),

    #[error("target column '{0}' not found")]
    MissingTargetColumn(String),

    #[error("target vector length {got} does not match row count {expected}")]
    TargetLengthMismatch { got: usize, expected: usize },

    #[error("fold count {k} exceeds sample count {n}")]
    TooManyFolds { k: usize, n: usize },

    #[error("fold count must be at least 2, got {0}")]
    TooFewFolds(usize),

    #[error("fold index {fold} out of range for {k} folds")]
    FoldOutOfRange { fold: usize, k: usize },

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("need at least {need} feature columns, got {got}")]
    TooFewColumns { need: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected} columns, got {got}")]
    ColumnCountMismatch { expected: usize, got: usize },

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    #[error("target is constant; univariate F statistics are undefined")]
    ConstantTarget,

    #[error("selection size {k} exceeds the {available} surviving components")]
    SelectionTooLarge { k: usize, available: usize },

    #[error("table has no target column")]
    MissingTarget,

    #[error("non-finite value in {0}")]
    NonFiniteInput(String),

    #[error("invalid estimator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid StackNet config: {0}")]
    InvalidConfig(String),

    #[error("report counts top {top} + bottom {bottom} exceed feature count {p}")]
    ReportCountsTooLarge { top: usize, bottom: usize, p: usize },

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),

    #[error("unsupported format version {got}, expected {expected}")]
    UnsupportedFormatVersion { got: u32, expected: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
