//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input admits no well-defined answer (e.g. all points identical).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Tensor operands have incompatible shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Softmax requested over a row whose entries are all forbidden.
    #[error("degenerate mask: {0}")]
    DegenerateMask(String),

    /// An API contract was violated (infeasible tour, non-scalar loss, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Instance exceeds an exact solver's size cap.
    #[error("instance too large: n={n}, limit={limit}")]
    TooLarge { n: usize, limit: usize },

    /// Malformed input text (dataset record, TSPLIB file, ...).
    #[error("parse error: {0}")]
    Parse(String),

    /// Recognized but unsupported file variant (e.g. non-EUC_2D weights).
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    /// Bad training/evaluation configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Dataset fails its structural invariants.
    #[error("dataset error: {0}")]
    Dataset(String),

    /// Non-finite values encountered during training; state was checkpointed.
    #[error("numerical abort: {0}")]
    NumericalAbort(String),

    /// Checkpoint file is malformed or inconsistent with the model.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
