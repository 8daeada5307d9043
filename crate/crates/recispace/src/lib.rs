//! File formats, the report pipeline and the command-line front end for
//! reciprocity-space analysis. The computations live in `recispace_core`.

mod error;

pub mod activity_io;
pub mod config;
pub mod edges;
pub mod manifest;
pub mod pipeline;
pub mod synth;
pub mod tables;

pub use error::{Error, Result};
