use std::fmt;

use serde::{Deserialize, Serialize};

use obstruction_core::Error as CoreError;

/// Failure of a run, classified by exit code.
#[derive(Clone, Debug, PartialEq)]
pub enum LabError {
    /// Bad command line, unreadable or malformed scenario file.
    Input(String),
    /// An expression in a scenario failed to parse.
    Expression { field: String, source: String, pos: usize, msg: String },
    /// A command or formula was applied outside the class it holds on.
    Scope(String),
    /// The numerics themselves failed.
    Numeric(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Input(_) | LabError::Expression { .. } => 2,
            LabError::Scope(_) => 3,
            LabError::Numeric(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Input(_) => "input",
            LabError::Expression { .. } => "expression",
            LabError::Scope(_) => "scope",
            LabError::Numeric(_) => "numeric",
        }
    }

    /// Parse an expression, attaching the field name and source to errors.
    pub fn expr<T>(field: &str, source: &str, r: obstruction_core::Result<T>) -> Result<T, LabError> {
        r.map_err(|e| match e {
            CoreError::Parse { pos, msg } => {
                LabError::Expression { field: field.into(), source: source.into(), pos, msg }
            }
            other => LabError::from(other),
        })
    }

    pub fn record(&self) -> ErrorRecord {
        let (field, position) = match self {
            LabError::Expression { field, pos, .. } => (Some(field.clone()), Some(*pos)),
            _ => (None, None),
        };
        ErrorRecord {
            error: ErrorBody {
                kind: self.kind().into(),
                message: self.to_string(),
                field,
                position,
                exit_code: self.exit_code(),
            },
        }
    }
}

impl From<CoreError> for LabError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parse { .. } | CoreError::Invalid(_) => LabError::Input(e.to_string()),
            CoreError::Scope(_) => LabError::Scope(e.to_string()),
            _ => LabError::Numeric(e.to_string()),
        }
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Input(s) | LabError::Scope(s) | LabError::Numeric(s) => f.write_str(s),
            LabError::Expression { field, source, pos, msg } => {
                writeln!(f, "{}: parse error at position {}: {}", field, pos, msg)?;
                writeln!(f, "  {}", source)?;
                write!(f, "  {}^", " ".repeat(*pos))
            }
        }
    }
}

impl std::error::Error for LabError {}

/// Machine-readable form of a failed run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub error: ErrorBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    pub exit_code: i32,
}
