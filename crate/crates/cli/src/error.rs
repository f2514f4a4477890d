use qtomo::FORMAT_VERSION;
use serde_json::json;
use std::fmt;

/// A failed command, classified for the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input: exit 2.
    Usage(String),
    /// Errors raised by the library.
    Lib(qtomo::Error),
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<qtomo::Error> for CliError {
    fn from(e: qtomo::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(qtomo::Error::Json(e))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use qtomo::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Lib(e) => match e {
                E::DimensionMismatch { .. } => "dimension_mismatch",
                E::InvalidSpec(_) => "invalid_spec",
                E::NotHermitian { .. } => "not_hermitian",
                E::Truncation(_) => "truncation",
                E::RankDeficient { .. } => "rank_deficient",
                E::Singular { .. } => "singular",
                E::NotEnoughSamples { .. } => "not_enough_samples",
                E::Precondition(_) => "precondition",
                E::Format(_) => "format",
                E::Json(_) => "json",
                E::Io(_) => "io",
            },
        }
    }

    /// 3 for numeric preconditions, 2 for everything the caller can fix by
    /// changing flags or input files.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "not_hermitian" | "truncation" | "rank_deficient" | "singular" | "not_enough_samples" | "precondition" => 3,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "version": FORMAT_VERSION,
            "error": { "code": self.exit_code(), "kind": self.kind(), "message": self.to_string() }
        })
        .to_string()
    }
}
