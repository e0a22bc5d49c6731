//! Minimum Gilbert arborescences in smooth Minkowski spaces.
//!
//! A Gilbert arborescence routes flow from weighted sources to one sink
//! along a tree with extra Steiner vertices; each edge costs `w(flow) ·
//! length` for a weight function `w`. The crate finds cheapest trees for
//! small instances, certifies them with dual-vector conditions, and builds
//! the classical closed-form examples.

pub mod certify;
pub mod model;
pub mod norms;
pub mod optimize;
pub mod special;
pub mod weights;
pub mod cli;
