use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: column '{name}' not found in header (available: {available})")]
    MissingColumn {
        path: PathBuf,
        name: String,
        available: String,
    },
    #[error("{path}:{line}: column '{column}': cannot parse {value:?} as a finite number")]
    BadNumber {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("{path}:{line}: column '{column}' is blank")]
    BlankCell {
        path: PathBuf,
        line: u64,
        column: String,
    },
    #[error("{path}:{line}: record has {got} fields, header has {expected}")]
    Ragged {
        path: PathBuf,
        line: u64,
        expected: usize,
        got: usize,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: no data rows")]
    NoRows { path: PathBuf },
    #[error("delimiter must be a single ASCII character, got {0:?}")]
    Delimiter(char),
    #[error("category '{category}' has a degenerate bandwidth ({reason})")]
    DegenerateBandwidth { category: String, reason: String },
    #[error(transparent)]
    Core(#[from] catgini::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    /// `3` when the computation is undefined on otherwise valid input,
    /// `2` for everything the user has to fix.
    pub fn exit_code(&self) -> u8 {
        use catgini::Error as E;
        match self {
            Self::DegenerateBandwidth { .. }
            | Self::Core(
                E::ZeroVariance(_) | E::HullViolation | E::AllZero | E::NoConvergence { .. },
            ) => 3,
            Self::Output(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
