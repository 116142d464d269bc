//! Front end for `leris-core`: TOML configuration, CSV and JSON outputs,
//! a thread pool for trial batches and the `leris` command line.

pub mod cli;
pub mod config;
pub mod fixture;
pub mod output;
pub mod run;
