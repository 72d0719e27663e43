//! Command-line front end for [`catgini`]: CSV ingestion, the `test`,
//! `estimate`, `simulate` and `density` commands, and a versioned JSON
//! envelope.
//!
//! Exit status: `0` success (whatever the decision), `2` input error, `3`
//! test undefined on the data.

pub mod args;
pub mod commands;
pub mod density;
pub mod error;
pub mod input;
pub mod output;

pub use args::{Cli, DEFAULT_SEED};
pub use commands::{run, run_to, Outcome, EXIT_DEGENERATE};
pub use error::{CliError, Result};
pub use input::{parse_dataset, read_dataset, write_dataset, CsvSchema};
