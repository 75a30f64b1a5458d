//! Library surface of the command-line tool: configuration schema,
//! report/CSV emission and the command runner. The `oligeq` binary is a
//! thin argument-parsing wrapper over `run::run`.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
