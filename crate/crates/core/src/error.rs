use thiserror::Error;

/// Errors produced anywhere in the embedding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("layer {layer}: expected input shape {expected:?}, got {actual:?}")]
    Shape {
        layer: usize,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("trace does not match network parameters: {0}")]
    Consistency(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate vector (norm {norm:e}) {context}")]
    Degenerate { norm: f64, context: String },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("segment '{label}' has {frames} frames, more than n_pad = {n_pad}")]
    Overflow {
        label: String,
        frames: usize,
        n_pad: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("average precision is undefined: no same-type pairs")]
    NoPositives,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
