//! Command-line front end for the seizure detection pipeline: file
//! formats, experiment configuration, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod fail;
pub mod io;
pub mod report;
