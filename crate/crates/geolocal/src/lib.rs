//! Desk-scale worst-to-average-case reduction for random geometrically-local
//! Hamiltonian evolutions: exact simulation, Gaussian geometry, robust
//! polynomial decoding and the two-level interpolation pipeline.

pub mod geometry;
pub mod hamiltonian;
pub mod interp;
pub mod lattice;
pub mod pipeline;
pub mod rng;
pub mod stats;
