//! File formats, PNG rendering, experiment drivers and the command line
//! around [`sepaint_core`].

pub mod cli;
pub mod config;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod manifest;

pub use error::{Error, Result};
pub use sepaint_core as core;
