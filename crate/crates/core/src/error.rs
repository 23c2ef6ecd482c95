use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("plan must be square for {context} (got {width}x{height})")]
    NonSquarePlan {
        width: usize,
        height: usize,
        context: &'static str,
    },

    #[error("mask spec produces no fuel channels")]
    EmptyMask,

    #[error("invalid {name}: {message}")]
    InvalidValue { name: &'static str, message: String },

    #[error("cell values inconsistent with fuel mask at level {level}, row {row}, col {col}")]
    MaskMismatch {
        level: usize,
        row: usize,
        col: usize,
    },

    #[error("transform {op} moved a brick onto an empty position; fuel mask is not symmetric under it")]
    AsymmetricMask { op: &'static str },

    #[error("duplicate augmentation op {op} in composition list")]
    DuplicateOp { op: &'static str },

    #[error("all raw labels identical ({value}); normalization is degenerate")]
    DegenerateLabels { value: f64 },

    #[error("label spread is zero; cannot fit mode/sigma")]
    DegenerateSigma,

    #[error("shape mismatch for {what}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        what: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("backward called without a preceding train-mode forward pass")]
    BackwardWithoutForward,

    #[error("weight container corrupt: {reason}")]
    CorruptContainer { reason: String },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("validation split leaves an empty side ({train} train / {val} val)")]
    EmptySplit { train: usize, val: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("all {n} repeat runs failed")]
    AllRunsFailed { n: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
