use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures surfaced by the command line, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("[{kind}] {0}", kind = kind_name(.0))]
    Core(#[from] extorus::Error),
    #[error("[InvalidArgument] {0}")]
    Invalid(String),
    #[error("[MalformedCsv] {file} line {line}: {message}")]
    Csv {
        file: String,
        line: u64,
        message: String,
    },
    #[error("[Io] {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("[ValidationFailed] criteria {0:?} failed")]
    ValidationFailed(Vec<u32>),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ValidationFailed(_) => 1,
            CliError::Core(extorus::Error::NoExceedances) => 4,
            CliError::Core(_) | CliError::Invalid(_) | CliError::Csv { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }
}

fn kind_name(err: &extorus::Error) -> &'static str {
    use extorus::Error::*;
    match err {
        DeterminantNotOne(_) => "DeterminantNotOne",
        NotHyperbolic(_) => "NotHyperbolic",
        ShiftSetInsufficient(_) => "ShiftSetInsufficient",
        RadiusTooLarge(_) => "RadiusTooLarge",
        OutOfLocalRange { .. } => "OutOfLocalRange",
        InvalidRegion(_) => "InvalidRegion",
        InvalidConfig(_) => "InvalidConfig",
        TooFewSamples { .. } => "TooFewSamples",
        NoExceedances => "NoExceedances",
        TooFewGaps(_) => "TooFewGaps",
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
