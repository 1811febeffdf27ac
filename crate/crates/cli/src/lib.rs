//! Command-line front end: the system file format and the command
//! implementations behind the `cjsr` binary.

pub mod commands;
pub mod file;

pub use commands::{CliError, Format, Output, ReportRow, Status, REPORT_COLUMNS};
pub use file::{load_system, FileError, LiftTable, SystemFile, SCHEMA_VERSION};
