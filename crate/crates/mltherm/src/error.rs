//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset ingestion, solvers, and thermodynamic evaluators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {path}")]
    MissingFile { path: String },

    #[error("column `{column}` not found in CSV header")]
    MissingColumn { column: String },

    #[error("non-numeric cell at data row {row}, column `{column}`: {value:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("CSV has a header but no data rows")]
    EmptyBody,

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid dataset: {reason}")]
    InvalidDataset { reason: String },

    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: String },

    #[error("invalid parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("dimension mismatch: expected {expected} parameters, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cross-entropy energy requires labels in {{0, 1}}; found {found} at row {row}")]
    NonBinaryLabels { row: usize, found: f64 },

    #[error("mean bias error is linear in the parameters and has no finite minimum")]
    MbeHasNoMinimum,

    #[error("no closed form for {what}; use an asymptotic evaluator or a numeric oracle")]
    Unsupported { what: String },

    #[error("initial entropy is zero; temperature is undefined")]
    ZeroEntropy,

    #[error("dimension {dim} too high for {what} (limit {limit})")]
    DimensionTooHigh {
        dim: usize,
        what: &'static str,
        limit: usize,
    },

    #[error("grid would hold {cells} cells, above the {limit} limit")]
    GridTooLarge { cells: u128, limit: u128 },

    #[error("halfwidth {halfwidth} covers only {mass} of the mass along dimension {dim}")]
    InsufficientHalfwidth {
        halfwidth: f64,
        mass: f64,
        dim: usize,
    },

    #[error("zero feature value makes the closed asymptotic form singular; use the exact oracle")]
    NeedsExactOracle,

    #[error("entropies are equal; shift temperature is undefined")]
    UndefinedShiftTemperature,

    #[error("regression models need a noise specification to define a conditional density")]
    MissingNoiseSpec,

    #[error("numeric overflow in {context}; reduce the scale or depth")]
    Overflow { context: String },
}

pub type Result<T> = std::result::Result<T, Error>;
