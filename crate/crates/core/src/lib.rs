//! Materiality analysis for scoped decision graphs.
//!
//! A context is material for a decision when some model compatible with the
//! graph gives it strictly positive value of information. This crate checks
//! graphical criteria for and against materiality, synthesizes models that
//! witness it, and verifies both directions by exact policy search.

pub mod bits;
pub mod builder;
pub mod check;
pub mod cli;
pub mod criteria;
pub mod fixtures;
pub mod graph;
pub mod policy;
pub mod random;
pub mod scm;
pub mod separation;

pub use graph::{Node, NodeKind, NodeSet, Path, ScopedGraph};
