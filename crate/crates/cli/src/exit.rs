use std::fmt;

/// Process exit codes. Each failure class has its own code so scripts can
/// tell a bad invocation from bad data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Other = 1,
    Usage = 2,
    Conflict = 3,
    Io = 4,
    Data = 5,
}

/// Mutually incompatible options.
#[derive(Debug)]
pub struct Conflict(pub String);

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conflicting options: {}", self.0)
    }
}

impl std::error::Error for Conflict {}

/// An invalid option value caught outside clap's own parsing.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn conflict(msg: impl Into<String>) -> anyhow::Error {
    Conflict(msg.into()).into()
}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

pub fn classify(err: &anyhow::Error) -> ExitCode {
    if err.chain().any(|c| c.is::<Conflict>()) {
        return ExitCode::Conflict;
    }
    if err.chain().any(|c| c.is::<Usage>()) {
        return ExitCode::Usage;
    }
    if err.chain().any(|c| c.is::<std::io::Error>()) {
        return ExitCode::Io;
    }
    match err.chain().find_map(|c| c.downcast_ref::<tbrank::Error>()) {
        Some(tbrank::Error::InvalidParameter(_)) => ExitCode::Usage,
        Some(tbrank::Error::Io { .. }) => ExitCode::Io,
        Some(_) => ExitCode::Data,
        None => ExitCode::Other,
    }
}
