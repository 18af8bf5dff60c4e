use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("frame dimensions {got:?} do not match expected {expected:?}{}", context_suffix(.context))]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
        context: Option<String>,
    },

    #[error("histogram has no samples")]
    EmptyHistogram,

    #[error("frame sequence is empty")]
    EmptySequence,

    #[error("no decodable image files in {0}")]
    EmptyDirectory(PathBuf),

    #[error("frame {width}x{height} is too small for superpixel size {min_side} (need min side >= {min_side})")]
    FrameTooSmall {
        width: usize,
        height: usize,
        min_side: usize,
    },

    #[error("image too small for structural similarity (min side {0}, need >= 11)")]
    ImageTooSmallForSsim(usize),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid scene script: {0}")]
    InvalidScript(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("failed to decode {path}: {source}")]
    Decode {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error("failed to encode {path}: {source}")]
    Encode {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn context_suffix(context: &Option<String>) -> String {
    match context {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(expected: (usize, usize), got: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected,
            got,
            context: None,
        }
    }

    pub(crate) fn dims_ctx(
        expected: (usize, usize),
        got: (usize, usize),
        context: impl Into<String>,
    ) -> Self {
        Error::DimensionMismatch {
            expected,
            got,
            context: Some(context.into()),
        }
    }
}
