//! Rate-1/3 feasibility analysis for groupcast index coding problems.
//!
//! The crate detects interference configurations that force message subsets
//! to span a fixed number of dimensions, combines those facts into
//! infeasibility certificates, constructs explicit length-3 codes through
//! alignment-edge contraction, and checks everything against an exhaustive
//! search on small instances.

pub mod dims;
pub mod fixtures;
pub mod gf;
pub mod model;
pub mod structure;
pub mod code;
pub mod oracle;
pub mod inference;
pub mod contraction;
pub mod constructor;
pub mod report;
pub mod cli;

pub use dims::DimSet;
pub use model::{MessageSet, ModelError, Problem, Receiver};
