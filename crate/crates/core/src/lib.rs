//! Convex cell decomposition, portal scoring and corridor search for
//! decomposition-informed motion planning.
//!
//! The crate is `no_std` (with `alloc`); file formats, timing and the
//! command-line front end live in the `cellplan` crate.
#![no_std]

extern crate alloc;

pub mod cbf;
pub mod cellgraph;
pub mod decomp2d;
pub mod decomp3d;
pub mod error;
pub mod eval;
pub mod geom;
pub mod gnn;
pub mod math;
pub mod pipeline;
pub mod scenarios;
pub mod validate;
pub mod search;

pub use error::*;
