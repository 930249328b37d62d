//! All-pairs effective resistances from the matrix form of the sketch.
//!
//! The sketch evaluator is a fixed quadratic form once its random choices
//! are drawn, so it has an explicit matrix `M` with `f(x) = x^T M x`.
//! Materializing the solver column by column gives `S`, and
//! `Q = 2 S^T − S^T M S` answers every pseudoinverse query by reading four
//! entries — resistance queries `χ_u − χ_v` in constant time after the
//! precompute.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::WeightedGraph;
use crate::pinv::{self, PinvParams};
use crate::sketch::{median, LaplacianSketch};
use crate::solver::SolverOperator;
use crate::{seed, Error, Result};

/// Explicit matrix of the sketch evaluator: `x^T M x = eval(sketch, x)`
/// for the same realization.
pub fn sketch_matrix(sk: &LaplacianSketch) -> DMatrix<f64> {
    let n = sk.n;
    let mut m = DMatrix::zeros(n, n);
    for entry in &sk.entries {
        let local = component_matrix(&entry.data);
        let weight = (1u64 << (entry.level - 1)) as f64;
        for (a, &ga) in entry.vertices.iter().enumerate() {
            for (b, &gb) in entry.vertices.iter().enumerate() {
                m[(ga, gb)] += weight * local[(a, b)];
            }
        }
    }
    m
}

/// Quadratic-form matrix of one component estimator, centering included.
fn component_matrix(data: &crate::sketch::ComponentSketch) -> DMatrix<f64> {
    let n = data.n();
    let degrees = data.degrees();
    let vol: f64 = degrees.iter().map(|&d| d as f64).sum();
    if vol == 0.0 {
        return DMatrix::zeros(n, n);
    }
    // Symmetric matrix of the four-sum estimator in centered coordinates.
    let mut core = DMatrix::zeros(n, n);
    for (u, &d) in degrees.iter().enumerate() {
        core[(u, u)] = d as f64;
    }
    for &(u, v) in data.stored_edges() {
        core[(u, v)] -= 1.0;
        core[(v, u)] -= 1.0;
    }
    let alpha = data.alpha() as f64;
    for &(u, v, count) in data.samples() {
        let half = 0.5 * data.high_internal_deg()[u] as f64 * count as f64 / alpha;
        core[(u, v)] -= half;
        core[(v, u)] -= half;
    }
    // Centering y = O x with O = I − 1 d^T / vol; fold O in on both sides.
    let deg_vec = DVector::from_iterator(n, degrees.iter().map(|&d| d as f64));
    let col_sums = core.row_sum(); // 1^T core, as a row vector
    // core · O = core − (core 1) d^T / vol
    let core_one = core.column_sum();
    let mut folded = core.clone();
    for r in 0..n {
        for c in 0..n {
            folded[(r, c)] -= core_one[r] * deg_vec[c] / vol;
        }
    }
    // O^T · (core O) = core O − d (1^T core O) / vol
    let one_core_o = {
        let mut row = vec![0.0; n];
        for (c, item) in row.iter_mut().enumerate() {
            let mut acc = col_sums[c];
            // subtract (1^T core 1) d_c / vol
            acc -= core_one.sum() * deg_vec[c] / vol;
            *item = acc;
        }
        row
    };
    for r in 0..n {
        for c in 0..n {
            folded[(r, c)] -= deg_vec[r] * one_core_o[c] / vol;
        }
    }
    folded
}

/// Materialize `S` column by column and form `Q = 2 S^T − S^T M S`.
/// Symmetry of `S` is asserted on sampled entry pairs.
pub fn build_q(solver: &SolverOperator, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if solver.sparsifier.graph.n() != n {
        return Err(Error::Dimension {
            expected: solver.sparsifier.graph.n(),
            got: n,
        });
    }
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            solver.apply_raw(&e)
        })
        .collect();
    let s = DMatrix::from_fn(n, n, |r, c| columns[c][r]);

    let scale = s.amax().max(1e-300);
    let mut rng = seed::rng(0x5eed_caf3);
    use rand::Rng;
    for _ in 0..64.min(n * n) {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let defect = (s[(i, j)] - s[(j, i)]).abs();
        if defect > 1e-8 * scale {
            return Err(Error::Certification(format!(
                "solver operator asymmetry {defect:.3e} at ({i}, {j}) exceeds 1e-8 relative"
            )));
        }
    }

    let ms = m * &s;
    Ok(2.0 * s.transpose() - s.transpose() * ms)
}

/// `(χ_u − χ_v)^T Q (χ_u − χ_v)` through an arbitrary entry accessor:
/// exactly four reads and constant arithmetic.
pub fn resistance_from_reads<F: FnMut(usize, usize) -> f64>(mut read: F, u: usize, v: usize) -> f64 {
    read(u, u) + read(v, v) - read(u, v) - read(v, u)
}

/// All-pairs effective resistance table with boosting metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceMatrix {
    pub r: DMatrix<f64>,
    pub copies: usize,
}

impl ResistanceMatrix {
    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.r[(u, v)]
    }
}

/// Build `copies` independent (solver, sketch, M, Q) stacks and take the
/// per-pair median of the Q quadratic forms. Pairs in different components
/// report `+inf`.
pub fn all_pairs_resistances(
    g: &WeightedGraph,
    epsilon: f64,
    copies: usize,
    seed_val: u64,
) -> Result<ResistanceMatrix> {
    all_pairs_with_params(g, epsilon, copies, seed_val, &PinvParams::default())
}

pub fn all_pairs_with_params(
    g: &WeightedGraph,
    epsilon: f64,
    copies: usize,
    seed_val: u64,
    params: &PinvParams,
) -> Result<ResistanceMatrix> {
    if copies == 0 || copies % 2 == 0 {
        return Err(Error::Precondition(format!(
            "copies must be odd and >= 1, got {copies}"
        )));
    }
    let n = g.n();
    let qs = build_q_stacks(g, epsilon, copies, seed_val, params)?;

    // Component ids for the +inf sentinel.
    let mut comp_id = vec![usize::MAX; n];
    for (ci, comp) in g.connected_components().iter().enumerate() {
        for &u in comp {
            comp_id[u] = ci;
        }
    }

    let mut r = DMatrix::zeros(n, n);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut row = vec![0.0; n];
            let mut values = Vec::with_capacity(qs.len());
            for (v, item) in row.iter_mut().enumerate() {
                if v == u {
                    continue;
                }
                if comp_id[u] != comp_id[v] {
                    *item = f64::INFINITY;
                    continue;
                }
                values.clear();
                for q in &qs {
                    values.push(resistance_from_reads(|a, b| q[(a, b)], u, v));
                }
                *item = median(&mut values);
            }
            row
        })
        .collect();
    for (u, row) in rows.into_iter().enumerate() {
        for (v, val) in row.into_iter().enumerate() {
            // Symmetric by construction: the query vector for (u, v) and
            // (v, u) is the same up to sign.
            r[(u, v)] = val;
        }
    }
    Ok(ResistanceMatrix { r, copies })
}

/// Resistances for an explicit pair list; still builds the Q precompute
/// but only reads the listed pairs.
pub fn pairs_resistances(
    g: &WeightedGraph,
    epsilon: f64,
    copies: usize,
    seed_val: u64,
    pairs: &[(usize, usize)],
    params: &PinvParams,
) -> Result<Vec<(usize, usize, f64)>> {
    if copies == 0 || copies % 2 == 0 {
        return Err(Error::Precondition(format!(
            "copies must be odd and >= 1, got {copies}"
        )));
    }
    let n = g.n();
    for &(u, v) in pairs {
        if u >= n || v >= n {
            return Err(Error::Domain(format!("pair ({u}, {v}) outside 0..{n}")));
        }
    }
    let qs = build_q_stacks(g, epsilon, copies, seed_val, params)?;
    let mut comp_id = vec![usize::MAX; n];
    for (ci, comp) in g.connected_components().iter().enumerate() {
        for &u in comp {
            comp_id[u] = ci;
        }
    }
    Ok(pairs
        .iter()
        .map(|&(u, v)| {
            if u == v {
                return (u, v, 0.0);
            }
            if comp_id[u] != comp_id[v] {
                return (u, v, f64::INFINITY);
            }
            let mut values: Vec<f64> = qs
                .iter()
                .map(|q| resistance_from_reads(|a, b| q[(a, b)], u, v))
                .collect();
            (u, v, median(&mut values))
        })
        .collect())
}

fn build_q_stacks(
    g: &WeightedGraph,
    epsilon: f64,
    copies: usize,
    seed_val: u64,
    params: &PinvParams,
) -> Result<Vec<DMatrix<f64>>> {
    let stack_params = PinvParams { copies: 1, ..*params };
    (0..copies)
        .map(|c| {
            let stack_seed = if c == 0 {
                seed_val
            } else {
                seed::derive_indexed(seed_val, "allpairs-stack", &[c as u64])
            };
            let psk = pinv::build_pinv_sketch_with_params(g, epsilon, stack_seed, &stack_params)?;
            let m = sketch_matrix(&psk.sketches[0]);
            build_q(&psk.solver, &m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle::{self, DenseOracle};
    use crate::sketch::{build_sketch, build_sketch_with_params, eval_sketch, SketchParams};
    use rand::Rng;

    #[test]
    fn matrix_of_exact_sketch_is_the_laplacian() {
        let g = WeightedGraph::new(2, &[(0, 1, 1)]).unwrap();
        let sk = build_sketch(&g, 0.25, 1).unwrap();
        let m = sketch_matrix(&sk);
        let l = oracle::dense_laplacian(&g);
        assert!((m - l).amax() < 1e-12);
    }

    #[test]
    fn matrix_matches_eval_on_exact_and_sampled_sketches() {
        let g = gen::weighted_random(24, 0.3, 11, 3);
        let sketches = [
            build_sketch(&g, 0.25, 5).unwrap(),
            build_sketch_with_params(
                &g,
                0.25,
                5,
                SketchParams {
                    c_alpha: 1e-4,
                    ..Default::default()
                },
            )
            .unwrap(),
        ];
        let mut rng = crate::seed::rng(9);
        for sk in &sketches {
            let m = sketch_matrix(sk);
            for _ in 0..50 {
                let x: Vec<f64> = (0..24).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let xv = DVector::from_column_slice(&x);
                let via_matrix = xv.dot(&(&m * &xv));
                let via_eval = eval_sketch(sk, &x).unwrap();
                assert!(
                    (via_matrix - via_eval).abs() <= 1e-8 * via_eval.abs().max(1e-9),
                    "matrix {via_matrix} eval {via_eval}"
                );
            }
        }
    }

    #[test]
    fn q_equals_pinv_when_both_parts_exact() {
        let g = gen::erdos_renyi(20, 0.35, 2);
        let psk = pinv::build_pinv_sketch(&g, 0.2, 3).unwrap();
        assert!(psk.sketches[0].is_fully_exact());
        let m = sketch_matrix(&psk.sketches[0]);
        let q = build_q(&psk.solver, &m).unwrap();
        let exact = DenseOracle::new(&g);
        let defect = (&q - exact.pseudoinverse()).amax();
        assert!(
            defect <= 1e-9 * exact.pseudoinverse().amax(),
            "defect {defect}"
        );
    }

    #[test]
    fn q_quadratic_form_matches_pinv_eval() {
        let g = gen::erdos_renyi(24, 0.3, 8);
        let psk = pinv::build_pinv_sketch(&g, 0.2, 21).unwrap();
        let m = sketch_matrix(&psk.sketches[0]);
        let q = build_q(&psk.solver, &m).unwrap();
        let oracle = DenseOracle::new(&g);
        let mut rng = crate::seed::rng(3);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..24).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let b = oracle.project_to_range(&raw);
            let bv = DVector::from_column_slice(&b);
            let via_q = bv.dot(&(&q * &bv));
            let via_eval = psk.eval(&b).unwrap();
            assert!(
                (via_q - via_eval).abs() <= 1e-8 * via_eval.abs().max(1e-12),
                "q {via_q} eval {via_eval}"
            );
        }
    }

    #[test]
    fn four_reads_per_pair() {
        let q = DMatrix::from_fn(4, 4, |r, c| (r * 10 + c) as f64);
        let mut reads = 0usize;
        let val = resistance_from_reads(
            |a, b| {
                reads += 1;
                q[(a, b)]
            },
            1,
            3,
        );
        assert_eq!(reads, 4);
        assert_eq!(val, q[(1, 1)] + q[(3, 3)] - q[(1, 3)] - q[(3, 1)]);
    }

    #[test]
    fn series_path_resistance() {
        let g = gen::path(3);
        let r = all_pairs_resistances(&g, 0.25, 1, 7).unwrap();
        assert!((r.get(0, 2) - 2.0).abs() <= 0.25 * 2.0);
        assert_eq!(r.get(1, 1), 0.0);
    }

    #[test]
    fn triangle_resistances() {
        let g = gen::clique(3);
        let r = all_pairs_resistances(&g, 0.25, 3, 5).unwrap();
        for (u, v) in [(0, 1), (0, 2), (1, 2)] {
            let val = r.get(u, v);
            assert!((val - 2.0 / 3.0).abs() <= 0.25 * 2.0 / 3.0, "r = {val}");
            assert_eq!(val, r.get(v, u));
        }
    }

    #[test]
    fn weighted_edge_resistance() {
        let g = WeightedGraph::new(2, &[(0, 1, 4)]).unwrap();
        let r = all_pairs_resistances(&g, 0.25, 1, 2).unwrap();
        assert!((r.get(0, 1) - 0.25).abs() <= 0.25 * 0.25);
    }

    #[test]
    fn cross_component_pairs_are_infinite() {
        let g = WeightedGraph::new(4, &[(0, 1, 1), (2, 3, 1)]).unwrap();
        let r = all_pairs_resistances(&g, 0.25, 1, 2).unwrap();
        assert!(r.get(0, 2).is_infinite());
        assert!(r.get(1, 3).is_infinite());
        assert!(r.get(0, 1).is_finite());
    }

    #[test]
    fn all_pairs_consistent_with_pinv_queries() {
        // Same master seed: stack 0 of all_pairs is the same realization as
        // the standalone pseudoinverse sketch.
        let g = gen::erdos_renyi(16, 0.4, 4);
        let seed_val = 33;
        let r = all_pairs_resistances(&g, 0.2, 1, seed_val).unwrap();
        let psk = pinv::build_pinv_sketch(&g, 0.2, seed_val).unwrap();
        for u in 0..16 {
            for v in (u + 1)..16 {
                let direct = psk.resistance(u, v).unwrap();
                let table = r.get(u, v);
                assert!(
                    (direct - table).abs() <= 1e-8 * direct.abs().max(1e-12),
                    "({u},{v}): table {table} direct {direct}"
                );
            }
        }
    }

    #[test]
    fn copies_must_be_odd() {
        let g = gen::clique(4);
        assert!(all_pairs_resistances(&g, 0.25, 2, 1).is_err());
    }

    #[test]
    fn pairs_file_mode_matches_full_table() {
        let g = gen::erdos_renyi(12, 0.5, 6);
        let pairs = vec![(0, 5), (3, 3), (2, 9)];
        let got = pairs_resistances(&g, 0.25, 3, 9, &pairs, &PinvParams::default()).unwrap();
        let full = all_pairs_resistances(&g, 0.25, 3, 9).unwrap();
        for (u, v, val) in got {
            assert_eq!(val.to_bits(), full.get(u, v).to_bits());
        }
    }
}
