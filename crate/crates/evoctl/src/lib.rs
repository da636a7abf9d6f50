//! Configuration-driven front end for the `evolve` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
