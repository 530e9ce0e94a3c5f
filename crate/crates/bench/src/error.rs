//! Benchmark errors, mapped onto the CLI exit codes:
//! 2 configuration, 3 I/O, 4 numerical failure.

use std::fmt;

#[derive(Debug)]
pub enum BenchError {
    Config(String),
    Io(String),
    Numerical(lodei_core::Error),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Io(_) => 3,
            BenchError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Config(msg) => write!(f, "config error: {msg}"),
            BenchError::Io(msg) => write!(f, "io error: {msg}"),
            BenchError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<lodei_core::Error> for BenchError {
    fn from(e: lodei_core::Error) -> Self {
        BenchError::Numerical(e)
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}
