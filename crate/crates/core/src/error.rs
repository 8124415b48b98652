use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Renders a 0-based multi-index in the 1-based form used by the text format.
pub(crate) fn one_based(idx: &[usize]) -> String {
    let parts: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
    format!("({})", parts.join(","))
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tensor shape: order {order}, dimension {dim} (need order >= 2, dimension >= 1)")]
    InvalidShape { order: usize, dim: usize },

    #[error("tensor of {elements} elements exceeds the element cap of {cap}")]
    SizeLimit { elements: u128, cap: usize },

    #[error("index {} out of range for dimension {dim}", one_based(.index))]
    IndexOutOfRange { index: Vec<usize>, dim: usize },

    #[error("multi-index has {got} components, tensor order is {expected}")]
    WrongArity { expected: usize, got: usize },

    #[error("duplicate entry at index {}", one_based(.index))]
    DuplicateEntry { index: Vec<usize> },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: order {left_order}/dimension {left_dim} vs order {right_order}/dimension {right_dim}")]
    ShapeMismatch {
        left_order: usize,
        left_dim: usize,
        right_order: usize,
        right_dim: usize,
    },

    #[error("zero diagonal entry in row {}", .row + 1)]
    ZeroDiagonal { row: usize },

    #[error("nonpositive diagonal entry {value} in row {}", .row + 1)]
    NonPositiveDiagonal { row: usize, value: f64 },

    #[error("negative entry at index {}", one_based(.index))]
    NegativeEntry { index: Vec<usize> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("generator could not produce a {class} tensor after {attempts} attempts")]
    Generation { class: String, attempts: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// I/O and parse failures as opposed to errors about the mathematical input.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse { .. })
    }
}
