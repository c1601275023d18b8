//! Files, experiments and the command line on top of `vidcast-core`.

pub mod commands;
pub mod config;
pub mod io;

pub use commands::Output;
pub use config::{Format, RunArgs};
