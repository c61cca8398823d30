//! Command-line front end for the `mackey` library: JSON experiment
//! configs, verification reports and a deterministic self-test.

pub mod commands;
pub mod config;
pub mod error;
pub mod json;
pub mod verify;
