use std::fmt;

use toda_core::TodaError;

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing inputs. Exit code 2.
    Config(String),
    /// The numerics failed. Exit code 3; the diagnostic is written as JSON.
    Numerical { message: String, diagnostic: serde_json::Value },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Numerical { message, .. } => write!(f, "{message}"),
        }
    }
}

impl From<TodaError> for CliError {
    fn from(e: TodaError) -> Self {
        let message = e.to_string();
        match e {
            TodaError::Solver(f) => CliError::Numerical {
                message,
                diagnostic: serde_json::to_value(&*f).unwrap_or(serde_json::Value::Null),
            },
            TodaError::Numerical(_) | TodaError::Invariant(_) | TodaError::DegenerateProjection(_) => {
                CliError::Numerical { diagnostic: serde_json::json!({ "message": message }), message }
            }
            _ => CliError::Config(message),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
