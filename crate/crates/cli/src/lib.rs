//! Library side of the `schottky` CLI: config/report schemas and the
//! command implementations. The binary in `main.rs` only parses arguments
//! and maps errors to exit codes.

pub mod commands;
pub mod config;
pub mod report;

/// Exit codes: stable contract.
pub mod exit_codes {
    /// Everything succeeded.
    pub const OK: i32 = 0;
    /// Domain failure: validation failed, series/quadrature/solver did not
    /// converge.
    pub const DOMAIN: i32 = 1;
    /// Usage or parse error: bad flags, malformed config/targets files.
    pub const USAGE: i32 = 2;
}

/// Error type carrying the exit class.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit_codes::USAGE,
            CliError::Domain(_) => exit_codes::DOMAIN,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
