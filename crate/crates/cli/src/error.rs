use serde_json::json;
use thiserror::Error;

use crate::Artifact;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_PARSE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A budget ran out; `partial` holds whatever artifacts could still be
    /// produced.
    #[error("{source}")]
    Budget {
        source: growthlab::Error,
        partial: Vec<Artifact>,
    },

    #[error(transparent)]
    Core(#[from] growthlab::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => EXIT_PARSE,
            CliError::Budget { .. } => EXIT_BUDGET,
            CliError::Core(e) => match e {
                growthlab::Error::Parse { .. } => EXIT_PARSE,
                growthlab::Error::BudgetExceeded { .. }
                | growthlab::Error::SearchBudgetExceeded { .. }
                | growthlab::Error::AmbiguityBudgetExceeded { .. }
                | growthlab::Error::TooManyQuadruples { .. } => EXIT_BUDGET,
                _ => EXIT_FAILURE,
            },
            _ => EXIT_FAILURE,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Budget { .. } => "budget",
            CliError::Core(e) => match e {
                growthlab::Error::Parse { .. } => "parse",
                growthlab::Error::BudgetExceeded { .. }
                | growthlab::Error::SearchBudgetExceeded { .. }
                | growthlab::Error::AmbiguityBudgetExceeded { .. }
                | growthlab::Error::TooManyQuadruples { .. } => "budget",
                _ => "error",
            },
            CliError::Io { .. } => "io",
            CliError::Input(_) => "input",
            CliError::ThreadPool(_) => "threads",
        }
    }

    /// The single-line JSON diagnostic written to stderr.
    pub fn to_json(&self) -> String {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Parse { line, column, .. } = self {
            v["line"] = json!(line);
            v["column"] = json!(column);
        }
        if let CliError::Budget {
            source:
                growthlab::Error::BudgetExceeded {
                    radius_reached,
                    partial,
                    ..
                },
            ..
        }
        | CliError::Core(growthlab::Error::BudgetExceeded {
            radius_reached,
            partial,
            ..
        }) = self
        {
            v["radius_reached"] = json!(radius_reached);
            v["partial_counts"] = json!(partial);
        }
        v.to_string()
    }
}
