//! Blow-up graph models, sparse regularity verification, canonical subgraph
//! counting, and a deterministic Monte-Carlo experiment harness.
//!
//! The crate is organized around a few small immutable data types:
//! [`model::PatternGraph`] (the template), [`model::ClassedGraph`] (a
//! blow-up instance with bitset adjacency per pattern pair), and
//! [`auxgraph::AuxGraph`] (the bipartite graph between an anchor class and
//! a product of two classes). Everything that decides a verdict — densities,
//! regularity windows, expected counts, badness thresholds — uses exact
//! rational arithmetic; floating point appears only in reports.

pub mod auxgraph;
pub mod bitset;
pub mod counting;
pub mod experiments;
pub mod model;
pub mod rational;
pub mod regularity;
pub mod sampling;
