//! Command-line front end for the fact-checking workbench.

pub mod args;
pub mod commands;
pub mod config;
pub mod server;

pub use args::Cli;
pub use commands::run;
