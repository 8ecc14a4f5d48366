//! Desk-scale stack of many-core optimizations for unstructured-mesh
//! finite-volume solvers: two-level mesh decomposition and renumbering,
//! block-sparse PDE kernels with conflict-free parallel assembly,
//! tabulated/mixed-precision MLP inference, and collated parallel I/O.
//!
//! Algorithm variants (graph partitioners, solver preconditioners, file
//! read strategies, activation evaluation) sit behind trait objects and
//! are selected by name at runtime; see [`registry`].

pub mod config;
pub mod error;
pub mod fvm;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod nn;
pub mod partition;
pub mod pool;
pub mod registry;
pub mod sparse;

pub use error::{Error, Result};
