use std::path::{Path, PathBuf};

/// Failures of the file and command layer. Each category maps to its own
/// process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("cannot parse number {text:?} ({context})")]
    Number { text: String, context: String },

    #[error(transparent)]
    Compute(#[from] visnav_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Format { .. } => 4,
            CliError::Number { .. } => 5,
            CliError::Compute(_) => 6,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Parses a float, tagging failures with `context`.
pub fn parse_f64(text: &str, context: &str) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| CliError::Number {
        text: text.to_string(),
        context: context.to_string(),
    })
}

pub fn parse_usize(text: &str, context: &str) -> Result<usize> {
    text.trim().parse::<usize>().map_err(|_| CliError::Number {
        text: text.to_string(),
        context: context.to_string(),
    })
}

/// Comma-separated floats such as `1.0,2.5`.
pub fn parse_list(text: &str, context: &str) -> Result<Vec<f64>> {
    text.split(',').map(|t| parse_f64(t, context)).collect()
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
