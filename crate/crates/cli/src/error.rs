use std::path::Path;

use serde_json::json;

/// Failure of one CLI invocation, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    Config {
        field: String,
        reason: String,
    },
    Io(String),
    Core(cos2phi::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 4,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse { .. } => "parse",
            CliError::Config { .. } => "validation",
            CliError::Io(_) => "io",
            CliError::Core(e) if e.is_numerical() => "numerical",
            CliError::Core(cos2phi::Error::Parse { .. }) => "parse",
            CliError::Core(_) => "validation",
        }
    }

    /// One-line JSON object written to stderr.
    pub fn to_json(&self) -> String {
        let mut v = json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() });
        match self {
            CliError::Parse { line, column, .. }
            | CliError::Core(cos2phi::Error::Parse { line, column, .. }) => {
                v["line"] = json!(line);
                v["column"] = json!(column);
            }
            CliError::Config { field, .. }
            | CliError::Core(cos2phi::Error::Validation { field, .. }) => {
                v["field"] = json!(field);
            }
            _ => {}
        }
        v.to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Parse { message, .. } => write!(f, "{message}"),
            CliError::Config { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cos2phi::Error> for CliError {
    fn from(e: cos2phi::Error) -> Self {
        CliError::Core(e)
    }
}
