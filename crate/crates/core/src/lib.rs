//! Reciprocity-space analysis of directed follow graphs.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the pure parts of
//! the analysis: edge-set construction and mutual-edge counting, reciprocity
//! coordinates and archetype labels, grid aggregation, per-user activity
//! metrics, chi-square vocabulary scoring, rank-based tests and inter-archetype
//! flow matrices. File formats, the report pipeline and the CLI live in the
//! `recispace` crate.
#![no_std]

extern crate alloc;

mod error;

pub mod activity;
pub mod flow;
pub mod generator;
pub mod graph;
pub mod reciprocity;
pub mod special;
pub mod stats;
pub mod vocab;

pub use error::{Error, Result};
pub use graph::{DegreeSummary, DirectedEdge, Direction, EdgeStore, UserId};
pub use reciprocity::{ArchetypeLabel, ClassifierConfig, ReciprocityPoint};
