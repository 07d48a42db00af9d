//! File formats, the training driver and the batch commands built on
//! `chordkit-core`.

pub mod annotation;
pub mod audio;
mod bytes;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod featfile;
pub mod manifest;
pub mod report;

pub use chordkit_core as core;
pub use error::{Error, Result};

/// Environment variable naming the default data root.
pub const DATA_ENV: &str = "CHORDKIT_DATA";
