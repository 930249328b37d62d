//! Pseudoinverse sketches.
//!
//! A pseudoinverse query `b^T L^+ b` equals the maximum of
//! `q(z) = 2 b^T z − z^T L z`. The sketch stores a solver operator `S`
//! (approximate maximizer: `y = S b`) and a Laplacian sketch `f`
//! (approximate evaluator of `y^T L y`), and answers with `2 b^T y − f(y)`.
//! Both sub-objects are built at `ε/4` so the combined error lands within
//! `ε` of the true quadratic form.

use serde::{Deserialize, Serialize};

use crate::graph::WeightedGraph;
use crate::sketch::{self, LaplacianSketch, SketchParams};
use crate::solver::{self, SolverOperator, SolverParams};
use crate::{seed, Error, Result};

/// `q(z) = 2 b^T z − z^T L z`, the objective whose maximum is `b^T L^+ b`.
pub fn q_form(g: &WeightedGraph, b: &[f64], z: &[f64]) -> Result<f64> {
    if b.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: b.len(),
        });
    }
    if z.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: z.len(),
        });
    }
    let linear: f64 = b.iter().zip(z).map(|(x, y)| x * y).sum();
    Ok(2.0 * linear - g.quadratic_form(z)?)
}

/// Paired solver + sketch bundle answering pseudoinverse queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoinverseSketch {
    pub solver: SolverOperator,
    /// One or more independently seeded Laplacian sketches; queries take
    /// the median across them.
    pub sketches: Vec<LaplacianSketch>,
    pub epsilon: f64,
    pub epsilon_internal: f64,
    pub seed: u64,
    pub graph_hash: u64,
}

/// Build-time knobs; `copies` is the number of bundled Laplacian sketches.
#[derive(Debug, Clone, Copy)]
pub struct PinvParams {
    pub sketch: SketchParams,
    pub solver: SolverParams,
    pub copies: usize,
}

impl Default for PinvParams {
    fn default() -> Self {
        Self {
            sketch: SketchParams::default(),
            solver: SolverParams::default(),
            copies: 1,
        }
    }
}

pub fn build_pinv_sketch(
    g: &WeightedGraph,
    epsilon: f64,
    seed_val: u64,
) -> Result<PseudoinverseSketch> {
    build_pinv_sketch_with_params(g, epsilon, seed_val, &PinvParams::default())
}

pub fn build_pinv_sketch_with_params(
    g: &WeightedGraph,
    epsilon: f64,
    seed_val: u64,
    params: &PinvParams,
) -> Result<PseudoinverseSketch> {
    if epsilon <= 0.0 {
        return Err(Error::Precondition(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    // Both halves run at ε/4, which the solver limits to 1/16.
    let epsilon_internal = epsilon / 4.0;
    if epsilon_internal > 1.0 / 16.0 {
        return Err(Error::Precondition(format!(
            "epsilon {epsilon} rescales to {epsilon_internal} > 1/16; request epsilon <= 1/4"
        )));
    }
    if params.copies == 0 {
        return Err(Error::Precondition("copies must be >= 1".into()));
    }
    let solver = solver::build_solver_operator_with_params(
        g,
        epsilon_internal,
        seed::derive(seed_val, b"pinv-solver"),
        &params.solver,
    )?;
    let sketches = sketch::build_sketch_bundle(
        g,
        epsilon_internal,
        params.copies,
        seed::derive(seed_val, b"pinv-sketch"),
        params.sketch,
    )?;
    Ok(PseudoinverseSketch {
        solver,
        sketches,
        epsilon,
        epsilon_internal,
        seed: seed_val,
        graph_hash: g.content_hash(),
    })
}

impl PseudoinverseSketch {
    pub fn n(&self) -> usize {
        self.sketches[0].n
    }

    pub fn copies(&self) -> usize {
        self.sketches.len()
    }

    /// `2 b^T y − f(y)` with `y = S b`; `b` must be in the range of the
    /// Laplacian (per-component sums zero within tolerance).
    pub fn eval(&self, b: &[f64]) -> Result<f64> {
        self.solver.check_range(b)?;
        self.eval_unchecked(b)
    }

    /// Range-projecting variant: removes the per-component mean first.
    pub fn eval_projected(&self, b: &[f64]) -> Result<f64> {
        if b.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: b.len(),
            });
        }
        let projected = self.solver.project_to_range(b);
        self.eval_unchecked(&projected)
    }

    fn eval_unchecked(&self, b: &[f64]) -> Result<f64> {
        let y = self.solver.apply_raw(b);
        let f = sketch::boosted_eval(&self.sketches, &y)?;
        let linear: f64 = b.iter().zip(&y).map(|(x, v)| x * v).sum();
        Ok(2.0 * linear - f)
    }

    /// Effective resistance query `b = χ_u − χ_v`; `+inf` across
    /// components.
    pub fn resistance(&self, u: usize, v: usize) -> Result<f64> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(Error::Domain(format!(
                "vertex pair ({u}, {v}) outside 0..{n}"
            )));
        }
        if u == v {
            return Ok(0.0);
        }
        let comp_of = |x: usize| {
            self.solver
                .components
                .iter()
                .position(|c| c.binary_search(&x).is_ok())
        };
        if comp_of(u) != comp_of(v) {
            return Ok(f64::INFINITY);
        }
        let mut b = vec![0.0; n];
        b[u] = 1.0;
        b[v] = -1.0;
        self.eval(&b)
    }
}
