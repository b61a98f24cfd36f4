use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index {index} out of range for size {size}")]
    Index { index: usize, size: usize },

    #[error("invalid edge weight {weight} for ({i}, {j}): weights must be strictly positive")]
    Weight { i: usize, j: usize, weight: f64 },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("starting vector is zero")]
    ZeroVector,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size {n} exceeds the dense cap {cap}; {hint}")]
    TooLarge { n: usize, cap: usize, hint: &'static str },

    #[error("operation requires an undirected graph")]
    RequiresUndirected,

    #[error("non-nested iterates: previous core is {prev_rows}x{prev_cols}, current is {rows}x{cols}")]
    NotNested { prev_rows: usize, prev_cols: usize, rows: usize, cols: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
