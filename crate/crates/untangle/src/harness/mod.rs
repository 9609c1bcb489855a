//! Instance generators, benchmark runner with bound fitting, and SVG
//! rendering backing the CLI.

pub mod bench;
pub mod gen;
pub mod render;
