//! Command-line front end: argument and config-file handling, ingestion,
//! and the `sharp`, `fuzzy`, `bandwidth`, `simulate` and `validate`
//! commands.

pub mod config;
pub mod ingest;
pub mod report;
pub mod space_arg;

mod commands;

pub use commands::{run, Output};
pub use config::{BwArg, Cli, Command};

use geordd::Error;
use serde_json::json;

/// Process exit code for an error: 2 when the data cannot support the
/// estimate, 1 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_estimation_failure() {
        2
    } else {
        1
    }
}

/// Machine-readable error record written to stderr.
pub fn error_json(e: &Error) -> String {
    json!({
        "error": {
            "code": e.code(),
            "message": e.to_string(),
            "exit_code": exit_code(e),
        }
    })
    .to_string()
}
