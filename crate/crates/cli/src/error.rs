use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Failure of a subcommand, reported on stderr as one JSON object.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> CliError {
        CliError {
            error: kind,
            message: message.into(),
            violations: Vec::new(),
        }
    }

    pub fn invalid(violations: Vec<String>) -> CliError {
        CliError {
            error: "invalid_config",
            message: format!("{} configuration problem(s)", violations.len()),
            violations,
        }
    }

    pub fn path(path: &Path, err: impl fmt::Display) -> CliError {
        CliError::new("path", format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self.error {
            "invalid_config" => 2,
            "path" => 3,
            "check_failed" => 4,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.error))
    }
}

impl From<rerm_core::Error> for CliError {
    fn from(e: rerm_core::Error) -> Self {
        use rerm_core::Error as E;
        let kind = match &e {
            E::Parse { .. } | E::OutOfRange { .. } | E::EmptyGraph | E::Format(_) | E::NoWalk => "data",
            E::Config(_) => "invalid_config",
            E::Path { .. } => "path",
            E::Io(_) => "io",
            E::Diverged { .. } => "diverged",
            E::TooLarge(_) => "too_large",
            E::NonFinite(_) => "non_finite",
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new("io", e.to_string())
    }
}
