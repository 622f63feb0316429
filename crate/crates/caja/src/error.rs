use std::fmt;

use serde::{Deserialize, Serialize};

/// One failed check against a [`GameConfig`](crate::GameConfig) field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid game config: {}", join(.0))]
    InvalidConfig(Vec<FieldError>),
    #[error("literal count {requested} exceeds the {available} visible attributes")]
    LiteralCountTooLarge { requested: usize, available: usize },
    #[error("boundary already constrains every attribute; no literal can be added")]
    NoUnusedAttribute,
    #[error("no 3-literal boundary introduces new errors over this feature space")]
    NoIncompatibleBoundary,
    #[error("{phase} phase of {length} cycles at accuracy {accuracy} rounds to zero errors")]
    PhaseTooShort {
        phase: &'static str,
        length: usize,
        accuracy: f64,
    },
    #[error("{phase} phase needs {needed} objects outside the error boundary but none exist")]
    BoundaryCoversEverything { phase: &'static str, needed: usize },
    #[error("session finished after {total_cycles} cycles")]
    SessionFinished { total_cycles: usize },
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
}

fn join(errors: &[FieldError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
