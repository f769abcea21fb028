use std::path::PathBuf;

use thiserror::Error;

/// A single configuration problem, optionally tied to a line of the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {}: {}", line, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("density {rho:e} below floor {floor:e} (vacuum breach)")]
    Vacuum { rho: f64, floor: f64 },
    #[error("time step {dt:e} exceeds stability limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite value in field `{field}`")]
    NonFinite { field: &'static str },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),
    #[error("snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    let parts: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
    format!("config error: {}", parts.join("; "))
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::Vacuum { .. } | Error::Cfl { .. } | Error::NonFinite { .. } => 3,
            Error::Verification(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
