use std::fmt;

/// Process exit status of a subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    VerificationFailed = 1,
    Usage = 2,
    Resource = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// A failed command: the exit status and a message for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { status: Status::Usage, message: message.into() }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::usage(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<scramble::error::Error> for CliError {
    fn from(e: scramble::error::Error) -> Self {
        let status = match e {
            scramble::error::Error::Resource(_) => Status::Resource,
            _ => Status::Usage,
        };
        Self { status, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
