//! Polynomial recovery from separated, partly corrupted samples.

mod bins;
mod bw;
mod dataset;
mod lagrange;
pub mod lp;
mod poly;
mod rebw;
mod remez;

use thiserror::Error;

pub use bins::{delta_separated_subset, make_bins_circumference, make_bins_radial, occupancy_sample_count, BinFamily};
pub use bw::classic_berlekamp_welch;
pub use dataset::{points, read_csv, write_csv, NoisySample, Provenance};
pub use lagrange::lagrange_eval;
pub use lp::{solve_linear_feasibility, solve_minimax, LinearProgram, LpError, LpOutcome, Relation};
pub use poly::{monomial_to_chebyshev, AffineMap, ChebyshevSeries, Polynomial};
pub use rebw::{
    lp1_program, lp2_program, rebw_programs, robust_berlekamp_welch, robust_berlekamp_welch_with, Decoded,
    RebwOptions, TRUST_RATIO,
};
pub use remez::{leading_coeff_floor, ln_remez_extrapolation_bound, remez_extrapolation_bound, remez_interior_bound};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{0} infeasible: noise level or error count understated")]
    AssumptionViolated(&'static str),
    #[error("have {have} nodes, need {need}")]
    InsufficientNodes { have: usize, need: usize },
    #[error("nodes {a} and {b} closer than delta={delta}")]
    NotSeparated { a: f64, b: f64, delta: f64 },
    #[error("duplicate node {0}")]
    DuplicateNodes(f64),
    #[error("unrecoverable: {0}")]
    Unrecoverable(String),
    #[error("invalid bins: {0}")]
    InvalidBins(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub(crate) fn hull(points: &[(f64, f64)]) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)))
}
