//! Files, formats and the command line around `sdrl-core`.

pub mod checkpoint;
pub mod cli;
pub mod codec;
pub mod commands;
pub mod config;
pub mod csvout;
pub mod error;
pub mod export;
pub mod loaders;
pub mod manifest;
pub mod snapshot;
pub mod toy;

pub use error::{Error, Result};
