use klap_core::KlapError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{path}: field `{field}`{loc}: {message}", loc = line_suffix(*line))]
    Parse {
        path: String,
        field: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{path}: {source}")]
    Model {
        path: String,
        #[source]
        source: KlapError,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Numerical(#[from] KlapError),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

impl CliError {
    pub fn parse(path: &str, field: &str, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_string(),
            field: field.to_string(),
            line: None,
            message: message.into(),
        }
    }

    pub fn parse_at(path: &str, field: &str, line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_string(),
            field: field.to_string(),
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

/// Exit codes: 0 success or passive, 1 non-passive, 2 any error.
pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_PASSIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
