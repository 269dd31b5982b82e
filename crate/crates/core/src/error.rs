use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {0}: every axis must be at least 1")]
    EmptyDims(String),

    #[error("value count {actual} does not match dims {dims} (expected {expected})")]
    ValueCount {
        dims: String,
        expected: usize,
        actual: usize,
    },

    #[error("volume {z}x{y}x{x} does not fit in an addressable frame")]
    Oversize { z: usize, y: usize, x: usize },

    #[error("{what} out of bounds: {detail}")]
    OutOfBounds { what: &'static str, detail: String },

    #[error("{what} dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        actual: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("corrupt input {}: expected {expected} bytes, found {actual}", path.display())]
    CorruptInput {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("missing media file {}", path.display())]
    MissingMedia { path: PathBuf },

    #[error("corrupt media {}: {reason}", path.display())]
    CorruptMedia { path: PathBuf, reason: String },

    #[error("frame {} is {actual}, manifest layout requires {expected}", path.display())]
    FrameDimensions {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("invalid codec spec: {0}")]
    InvalidSpec(String),

    #[error("unknown codec label {label:?}; known labels: {}", known.join(", "))]
    UnknownCodec { label: String, known: Vec<String> },

    #[error("external tool {program:?} is not available: {hint}")]
    ToolUnavailable { program: String, hint: String },

    #[error("encoder {label} failed ({status}): {diagnostics}")]
    EncoderFailed {
        label: String,
        status: String,
        diagnostics: String,
    },

    #[error("encoder {label} closed its input after {frames_written} frame(s)")]
    EncoderAborted {
        label: String,
        frames_written: usize,
    },

    #[error("decoder {label} failed ({status}): {diagnostics}")]
    DecoderFailed {
        label: String,
        status: String,
        diagnostics: String,
    },

    #[error("truncated stream: received {received} complete frame(s) of {expected} (+{partial_bytes} stray bytes)")]
    TruncatedStream {
        received: usize,
        expected: usize,
        partial_bytes: usize,
    },

    #[error("stream carries {extra} more bytes than {expected} frame(s) of {width}x{height}")]
    StreamOverrun {
        expected: usize,
        width: usize,
        height: usize,
        extra: u64,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the host environment rather than the data.
    pub fn is_environment(&self) -> bool {
        matches!(self, Error::ToolUnavailable { .. })
    }
}
