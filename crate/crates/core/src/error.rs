use std::path::PathBuf;

use thiserror::Error;

use crate::tensor::Shape5;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape has a zero extent: {0}")]
    ZeroExtent(Shape5),
    #[error("{op}: shape mismatch {left} vs {right}")]
    ShapeMismatch {
        op: &'static str,
        left: Shape5,
        right: Shape5,
    },
    #[error("{what}: expected {expected} tensors, got {got}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("buffer of length {len} does not fill shape {shape}")]
    BufferLength { shape: Shape5, len: usize },
    #[error("channel mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("kernel {kernel:?} larger than padded input {input:?}")]
    KernelTooLarge {
        kernel: [usize; 3],
        input: [usize; 3],
    },
    #[error("invalid convolution spec: {0}")]
    InvalidSpec(String),
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("tape does not belong to the current block state: {0}")]
    StaleTape(&'static str),
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("empty split: {0}")]
    EmptySplit(&'static str),
    #[error("index {index} out of range (extent {extent})")]
    IndexOutOfRange { index: usize, extent: usize },
    #[error("clip is already normalized")]
    AlreadyNormalized,
    #[error("value {value} outside of the raw pixel range [0, 255]")]
    ValueOutOfRange { value: f32 },
    #[error("class {0} is not part of this dataset spec")]
    InvalidClass(String),
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}
