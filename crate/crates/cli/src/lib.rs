//! Library surface of the `rotation` CLI: scenario configuration parsing,
//! validation and bit-stable output writers.

pub mod config;
pub mod output;

use rotation_core::ModelError;

/// CLI failure with its exit-code classification.
#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        CliError {
            kind: ErrorKind::Validation,
            message,
        }
    }

    pub fn numerical(err: ModelError) -> Self {
        CliError {
            kind: ErrorKind::Numerical,
            message: err.to_string(),
        }
    }

    pub fn io(message: String) -> Self {
        CliError {
            kind: ErrorKind::Io,
            message,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ErrorKind::Validation => "validation",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Io => "io",
        }
    }

    /// 1 for validation problems, 2 for numerical or I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 1,
            ErrorKind::Numerical | ErrorKind::Io => 2,
        }
    }
}
