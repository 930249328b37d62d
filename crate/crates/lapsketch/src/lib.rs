//! Spectral sketches of graph Laplacians and their pseudoinverses.
//!
//! The library builds small randomized sketches that answer Laplacian
//! quadratic-form queries `x^T L x` and pseudoinverse queries `b^T L^+ b`
//! (effective resistances in particular) to within `1 ± ε`, together with
//! an all-pairs effective-resistance precompute and a brute-force oracle
//! layer that verifies every statistical and spectral guarantee at small
//! scale.
//!
//! Pipeline, bottom up:
//!
//! * [`graph`] — canonical integer-weighted graphs, exact Laplacian and
//!   conductance arithmetic, bit-level decomposition.
//! * [`partition`] — recursive spectral bisection that splits each bit
//!   level into components certified to admit no low-conductance sweep cut.
//! * [`sketch`] — per-component degree/sampled-edge sketches and the
//!   full-graph assembly with median boosting.
//! * [`solver`] — spectral sparsifier plus an implicit symmetric operator
//!   `S ≈ L^+` built from a preconditioner polynomial.
//! * [`pinv`] — the pseudoinverse sketch pairing `S` with a Laplacian
//!   sketch, evaluated as `2 b^T y − f(y)`.
//! * [`allpairs`] — matrix form `M` of the sketch, `Q = 2S − S M S`, and
//!   the all-pairs resistance table.
//! * [`oracle`] — dense eigendecomposition ground truth, exhaustive
//!   conductance, a Johnson-Lindenstrauss baseline, and Monte-Carlo
//!   statistics harnesses.

pub mod allpairs;
pub mod gen;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod partition;
pub mod pinv;
pub mod seed;
pub mod serial;
pub mod sketch;
pub mod solver;

mod kahan;

pub use graph::{CutSpec, LevelGraph, UnweightedGraph, WeightedGraph};
pub use partition::{Partition, PartitionEntry};
pub use pinv::PseudoinverseSketch;
pub use sketch::{ComponentSketch, LaplacianSketch};
pub use solver::{SolverOperator, SpectralSparsifier};

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("certification failure: {0}")]
    Certification(String),

    #[error(
        "query vector outside operator range: component {component} has residual mass {residual:.3e} (tolerance {tol:.3e})"
    )]
    RangeViolation {
        component: usize,
        residual: f64,
        tol: f64,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
