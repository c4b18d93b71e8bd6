use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the pipeline.
///
/// The CLI maps each family onto a distinct exit code, see
/// [`Error::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{}", format_data_error(.path, *.line, .message))]
    Data {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    #[error("missing dataset file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_data_error(path: &std::path::Path, line: Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("{}:{}: {}", path.display(), l, message),
        None => format!("{}: {}", path.display(), message),
    }
}

impl Error {
    pub(crate) fn data(path: impl Into<PathBuf>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line.
    ///
    /// | code | meaning |
    /// |------|---------|
    /// | 1 | i/o failure |
    /// | 2 | config or argument error |
    /// | 3 | data error (malformed dataset) |
    /// | 4 | missing dataset file |
    /// | 5 | numeric failure |
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Data { .. } | Error::InvalidGraph(_) => 3,
            Error::MissingFile(_) => 4,
            Error::Numeric(_) => 5,
        }
    }
}
