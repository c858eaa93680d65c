use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Shape(String),

    #[error("{0}")]
    NonFinite(String),

    #[error("{0}")]
    Config(String),

    /// Anything wrong with the bytes of a model file or image.
    #[error("{kind}: {detail}")]
    Format { kind: FormatError, detail: String },

    #[error("{0}")]
    Corpus(String),

    #[error("{0}")]
    Autodiff(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatError {
    BadMagic,
    UnsupportedVersion,
    UnsupportedFormat,
    BadHeader,
    Truncated,
    SizeMismatch,
    Checksum,
    BadValue,
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FormatError::BadMagic => "bad magic",
            FormatError::UnsupportedVersion => "unsupported version",
            FormatError::UnsupportedFormat => "unsupported format",
            FormatError::BadHeader => "bad header",
            FormatError::Truncated => "truncated",
            FormatError::SizeMismatch => "size mismatch",
            FormatError::Checksum => "checksum mismatch",
            FormatError::BadValue => "bad value",
        };
        f.write_str(s)
    }
}

impl Error {
    pub(crate) fn format(kind: FormatError, detail: impl Into<String>) -> Self {
        Error::Format {
            kind,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-parsable category used in CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non-finite",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::Corpus(_) => "corpus",
            Error::Autodiff(_) => "autodiff",
            Error::Io { .. } => "io",
        }
    }

    pub fn format_kind(&self) -> Option<FormatError> {
        match self {
            Error::Format { kind, .. } => Some(*kind),
            _ => None,
        }
    }
}
