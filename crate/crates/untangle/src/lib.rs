//! Flip-based untangling of crossing segment multisets.
//!
//! Exact integer geometry, degree- and property-preserving flips, potential
//! monitoring, removal/insertion strategies, a BFS optimality oracle, and a
//! benchmark harness.

pub mod engine;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod potentials;
pub mod strategies;
