use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid coding scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    /// No sifted counts at all, so the QBER has no denominator.
    #[error("QBER undefined: sifted rate is zero (dead channel)")]
    DeadChannel,

    #[error("insufficient key material: {have} sifted bits, need at least {need}")]
    InsufficientMaterial { have: usize, need: usize },

    #[error("reconciliation failed: {residual} residual mismatches after all passes")]
    ReconciliationFailed { residual: usize },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::InvalidScheme(_)
            | Error::InvalidParams(_)
            | Error::Config { .. }
            | Error::DeadChannel => exit_code::CONFIG,
            Error::InsufficientMaterial { .. } => exit_code::INSUFFICIENT_MATERIAL,
            Error::ReconciliationFailed { .. } => exit_code::RECONCILIATION_FAILED,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Exit statuses of the `ftqkd` binary.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const ABORT: i32 = 3;
    pub const INSUFFICIENT_MATERIAL: i32 = 4;
    pub const RECONCILIATION_FAILED: i32 = 5;
    pub const VALIDATION_BREACH: i32 = 6;
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
