//! Sampling sketches of Laplacian quadratic forms.
//!
//! Per component: store every edge touching a low-degree vertex, and for
//! each high-degree vertex store a fixed number of uniform-with-replacement
//! samples from its edges into the high-degree part. The evaluator centers
//! the query against the degree distribution and combines an exact degree
//! term, exact stored-edge terms, and an inverse-probability-weighted
//! sample term. Full-graph sketches assemble one component sketch per
//! partition entry, weighted `2^{level-1}`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{UnweightedGraph, WeightedGraph};
use crate::kahan::KahanSum;
use crate::partition::{self, PartitionParams};
use crate::{seed, Error, Result};

/// Sample budget: `ceil(c_alpha * log2(n)^4.5 / epsilon)`, at least 1.
pub fn alpha_for(n: usize, epsilon: f64, c_alpha: f64) -> u64 {
    let log = (n.max(2) as f64).log2();
    ((c_alpha * log.powf(4.5) / epsilon).ceil() as u64).max(1)
}

/// Sketch of a single unweighted component.
///
/// `degrees[u] <= alpha` marks the low-degree side; those vertices have all
/// incident edges in `stored_edges`. Every high-degree vertex `u` with at
/// least one high-degree neighbor carries exactly `alpha` sampled edge
/// draws, recorded as `(u, v, count)` with counts summing to `alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSketch {
    alpha: u64,
    degrees: Vec<u64>,
    /// Degree within the high-degree induced subgraph; 0 on the low side.
    high_internal_deg: Vec<u64>,
    stored_edges: Vec<(usize, usize)>,
    samples: Vec<(usize, usize, u32)>,
}

impl ComponentSketch {
    pub(crate) fn from_parts(
        alpha: u64,
        degrees: Vec<u64>,
        high_internal_deg: Vec<u64>,
        stored_edges: Vec<(usize, usize)>,
        samples: Vec<(usize, usize, u32)>,
    ) -> Self {
        Self {
            alpha,
            degrees,
            high_internal_deg,
            stored_edges,
            samples,
        }
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn high_internal_deg(&self) -> &[u64] {
        &self.high_internal_deg
    }

    pub fn stored_edges(&self) -> &[(usize, usize)] {
        &self.stored_edges
    }

    pub fn samples(&self) -> &[(usize, usize, u32)] {
        &self.samples
    }

    pub fn is_low(&self, u: usize) -> bool {
        self.degrees[u] <= self.alpha
    }

    /// True when every vertex is on the low side: the component is stored
    /// verbatim and evaluation is exact.
    pub fn is_exact(&self) -> bool {
        self.samples.is_empty() && self.degrees.iter().all(|&d| d <= self.alpha)
    }

    /// Stored edges plus total sample draws.
    pub fn stored_items(&self) -> usize {
        self.stored_edges.len() + self.samples.iter().map(|&(_, _, c)| c as usize).sum::<usize>()
    }

    /// Evaluate the estimator at `x` (indexed like the component).
    ///
    /// Centers `x` against the degrees, then returns
    /// `Σ y_u^2 δ_u − 2 Σ_stored y_u y_v − Σ_u (δ^L_u / α) Σ_v y_u y_v Y^u_v`.
    /// An edgeless component evaluates to 0.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: x.len(),
            });
        }
        let vol: f64 = self.degrees.iter().map(|&d| d as f64).sum();
        if vol == 0.0 {
            return Ok(0.0);
        }
        let mut weighted = KahanSum::new();
        for (u, &d) in self.degrees.iter().enumerate() {
            weighted.add(d as f64 * x[u]);
        }
        let c = weighted.value() / vol;
        let y: Vec<f64> = x.iter().map(|&v| v - c).collect();

        let mut degree_term = KahanSum::new();
        for (u, &d) in self.degrees.iter().enumerate() {
            degree_term.add(d as f64 * y[u] * y[u]);
        }
        // Stored edges enter the estimator from both endpoint sums.
        let mut stored_term = KahanSum::new();
        for &(u, v) in &self.stored_edges {
            stored_term.add(2.0 * y[u] * y[v]);
        }
        let mut sample_term = KahanSum::new();
        let alpha = self.alpha as f64;
        for &(u, v, count) in &self.samples {
            let scale = self.high_internal_deg[u] as f64 / alpha;
            sample_term.add(scale * y[u] * y[v] * count as f64);
        }
        Ok(degree_term.value() - stored_term.value() - sample_term.value())
    }
}

/// Build the sampling sketch of one unweighted component. Deterministic
/// given the seed; if `alpha` reaches the maximum degree the whole
/// component is stored and evaluation is exact.
pub fn sample_sketch(h: &UnweightedGraph, alpha: u64, seed_val: u64) -> Result<ComponentSketch> {
    if alpha == 0 {
        return Err(Error::Precondition("alpha must be >= 1".into()));
    }
    let n = h.n();
    let degrees = h.degrees();
    let adj = h.adjacency();
    let is_high: Vec<bool> = degrees.iter().map(|&d| d > alpha).collect();

    let mut stored_edges = Vec::new();
    for &(u, v) in h.edges() {
        if !is_high[u] || !is_high[v] {
            stored_edges.push((u, v));
        }
    }

    let mut high_internal_deg = vec![0u64; n];
    let mut samples = Vec::new();
    let mut rng = seed::rng(seed_val);
    for u in 0..n {
        if !is_high[u] {
            continue;
        }
        let high_neighbors: Vec<usize> = adj[u].iter().copied().filter(|&v| is_high[v]).collect();
        high_internal_deg[u] = high_neighbors.len() as u64;
        if high_neighbors.is_empty() {
            continue;
        }
        let mut counts = vec![0u32; high_neighbors.len()];
        for _ in 0..alpha {
            let pick = rng.random_range(0..high_neighbors.len());
            counts[pick] += 1;
        }
        for (i, &v) in high_neighbors.iter().enumerate() {
            if counts[i] > 0 {
                samples.push((u, v, counts[i]));
            }
        }
    }
    Ok(ComponentSketch {
        alpha,
        degrees,
        high_internal_deg,
        stored_edges,
        samples,
    })
}

/// Exact-storage sketch: the whole component is kept verbatim.
pub fn exact_sketch(h: &UnweightedGraph) -> ComponentSketch {
    let max_deg = h.degrees().into_iter().max().unwrap_or(0).max(1);
    sample_sketch(h, max_deg, 0).expect("alpha >= 1")
}

/// One component sketch positioned in the parent graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchEntry {
    pub level: u32,
    pub round: u32,
    /// Local index -> parent vertex id.
    pub vertices: Vec<usize>,
    pub data: ComponentSketch,
    /// Stored verbatim because the partitioner could not certify it.
    pub exact_fallback: bool,
}

/// Full-graph sketch: one entry per partition component, evaluated as
/// `Σ 2^{level-1} eval(entry, x|entry)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianSketch {
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub alpha: u64,
    pub c_alpha: f64,
    pub phi_target: f64,
    pub graph_hash: u64,
    pub entries: Vec<SketchEntry>,
}

impl LaplacianSketch {
    pub fn stored_items(&self) -> usize {
        self.entries.iter().map(|e| e.data.stored_items()).sum()
    }

    pub fn is_fully_exact(&self) -> bool {
        self.entries.iter().all(|e| e.data.is_exact())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        eval_sketch(self, x)
    }
}

/// Knobs for [`build_sketch_with_params`].
#[derive(Debug, Clone, Copy)]
pub struct SketchParams {
    /// Scale on the sample budget; the accuracy tests pin the default.
    pub c_alpha: f64,
    pub phi_target: Option<f64>,
    pub round_cap: Option<u32>,
    pub power_iters: Option<usize>,
}

impl Default for SketchParams {
    fn default() -> Self {
        Self {
            c_alpha: 1.0,
            phi_target: None,
            round_cap: None,
            power_iters: None,
        }
    }
}

/// Build a full-graph sketch with default parameters.
pub fn build_sketch(g: &WeightedGraph, epsilon: f64, seed_val: u64) -> Result<LaplacianSketch> {
    build_sketch_with_params(g, epsilon, seed_val, SketchParams::default())
}

pub fn build_sketch_with_params(
    g: &WeightedGraph,
    epsilon: f64,
    seed_val: u64,
    params: SketchParams,
) -> Result<LaplacianSketch> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Precondition(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    let partition = partition::split_with_params(
        g,
        seed::derive(seed_val, b"partition"),
        PartitionParams {
            phi_target: params.phi_target,
            round_cap: params.round_cap,
            power_iters: params.power_iters,
        },
    )?;
    let alpha = alpha_for(g.n(), epsilon, params.c_alpha);
    let component_seed_base = seed::derive(seed_val, b"component-sampling");
    let entries: Vec<SketchEntry> = partition
        .entries
        .into_par_iter()
        .map(|entry| {
            let data = if entry.certified {
                let entry_seed = seed::derive_indexed(
                    component_seed_base,
                    "component",
                    &[
                        entry.level as u64,
                        entry.round as u64,
                        entry.vertices[0] as u64,
                    ],
                );
                sample_sketch(&entry.component, alpha, entry_seed)?
            } else {
                exact_sketch(&entry.component)
            };
            Ok(SketchEntry {
                level: entry.level,
                round: entry.round,
                vertices: entry.vertices,
                data,
                exact_fallback: !entry.certified,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LaplacianSketch {
        n: g.n(),
        epsilon,
        seed: seed_val,
        alpha,
        c_alpha: params.c_alpha,
        phi_target: partition.phi_target,
        graph_hash: g.content_hash(),
        entries,
    })
}

/// Evaluate the full-graph sketch at `x`.
pub fn eval_sketch(sk: &LaplacianSketch, x: &[f64]) -> Result<f64> {
    if x.len() != sk.n {
        return Err(Error::Dimension {
            expected: sk.n,
            got: x.len(),
        });
    }
    let mut total = KahanSum::new();
    for entry in &sk.entries {
        let local: Vec<f64> = entry.vertices.iter().map(|&u| x[u]).collect();
        let value = entry.data.eval(&local)?;
        total.add((1u64 << (entry.level - 1)) as f64 * value);
    }
    Ok(total.value())
}

/// Median over independently seeded sketches.
pub fn boosted_eval(sketches: &[LaplacianSketch], x: &[f64]) -> Result<f64> {
    if sketches.is_empty() {
        return Err(Error::Precondition(
            "boosted evaluation needs at least one sketch".into(),
        ));
    }
    let mut values = Vec::with_capacity(sketches.len());
    for sk in sketches {
        values.push(eval_sketch(sk, x)?);
    }
    Ok(median(&mut values))
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Independently seeded sketch bundle for median boosting.
pub fn build_sketch_bundle(
    g: &WeightedGraph,
    epsilon: f64,
    copies: usize,
    seed_val: u64,
    params: SketchParams,
) -> Result<Vec<LaplacianSketch>> {
    (0..copies)
        .map(|c| {
            let copy_seed = if c == 0 {
                seed_val
            } else {
                seed::derive_indexed(seed_val, "sketch-copy", &[c as u64])
            };
            build_sketch_with_params(g, epsilon, copy_seed, params)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle;

    fn unweighted(g: &WeightedGraph) -> UnweightedGraph {
        UnweightedGraph::from_weighted_support(g)
    }

    #[test]
    fn star_all_low_degree() {
        let h = unweighted(&gen::star(5));
        let sk = sample_sketch(&h, 5, 1).unwrap();
        assert!(sk.is_exact());
        assert_eq!(sk.stored_edges().len(), 5);
        assert!(sk.samples().is_empty());
    }

    #[test]
    fn k4_alpha1_structure() {
        let h = unweighted(&gen::clique(4));
        let sk = sample_sketch(&h, 1, 3).unwrap();
        assert!((0..4).all(|u| !sk.is_low(u)));
        assert!(sk.stored_edges().is_empty());
        assert_eq!(sk.high_internal_deg(), &[3, 3, 3, 3]);
        // One draw per vertex.
        for u in 0..4 {
            let total: u32 = sk
                .samples()
                .iter()
                .filter(|&&(a, _, _)| a == u)
                .map(|&(_, _, c)| c)
                .sum();
            assert_eq!(total, 1);
        }
    }

    #[test]
    fn draw_counts_sum_to_alpha() {
        let h = unweighted(&gen::erdos_renyi(24, 0.5, 2));
        let alpha = 4;
        let sk = sample_sketch(&h, alpha, 9).unwrap();
        for u in 0..h.n() {
            let total: u32 = sk
                .samples()
                .iter()
                .filter(|&&(a, _, _)| a == u)
                .map(|&(_, _, c)| c)
                .sum();
            if !sk.is_low(u) && sk.high_internal_deg()[u] > 0 {
                assert_eq!(total as u64, alpha);
            } else {
                assert_eq!(total, 0);
            }
        }
    }

    #[test]
    fn exact_path_matches_quadratic_form() {
        let graphs = [gen::clique(6), gen::cycle(7), gen::dumbbell(4)];
        let mut rng = seed::rng(11);
        for g in &graphs {
            let h = unweighted(g);
            let sk = sample_sketch(&h, h.degrees().iter().copied().max().unwrap(), 0).unwrap();
            assert!(sk.is_exact());
            for _ in 0..10 {
                let x: Vec<f64> = (0..h.n()).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
                let exact = h.quadratic_form(&x).unwrap();
                let est = sk.eval(&x).unwrap();
                assert!((est - exact).abs() <= 1e-12 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn constant_vector_evaluates_to_zero() {
        let h = unweighted(&gen::clique(4));
        let sk = sample_sketch(&h, 1, 5).unwrap();
        let v = sk.eval(&[2.5; 4]).unwrap();
        assert!(v.abs() <= 1e-12);
    }

    #[test]
    fn edgeless_component_evaluates_to_zero() {
        let h = UnweightedGraph::new(3, &[]).unwrap();
        let sk = sample_sketch(&h, 2, 0).unwrap();
        assert_eq!(sk.eval(&[1.0, -4.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn k4_alpha1_estimator_is_unbiased() {
        // Monte-Carlo check of the expectation at a basis query: the exact
        // form is 3 for x = e0 on K4.
        let h = unweighted(&gen::clique(4));
        let x = [1.0, 0.0, 0.0, 0.0];
        let stats = oracle::monte_carlo_stats(
            |s| sample_sketch(&h, 1, s).unwrap().eval(&x).unwrap(),
            20_000,
            42,
        );
        let exact = h.quadratic_form(&x).unwrap();
        assert!(
            (stats.mean - exact).abs() <= 4.0 * stats.stderr,
            "mean {} vs exact {exact} (stderr {})",
            stats.mean,
            stats.stderr
        );
    }

    #[test]
    fn build_sketch_single_edge_exact() {
        let g = WeightedGraph::new(2, &[(0, 1, 1)]).unwrap();
        let sk = build_sketch(&g, 0.5, 1).unwrap();
        assert_eq!(sk.entries.len(), 1);
        assert!(sk.is_fully_exact());
        let v = sk.eval(&[1.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn small_graphs_exact_when_alpha_dominates() {
        // Exhaustive over all graphs on up to 4 vertices plus random ones
        // on 5 and 6; the default budget forces the exact path there.
        let mut rng = seed::rng(3);
        let mut graphs = Vec::new();
        for n in 2..=4usize {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .collect();
            for mask in 0..(1u32 << pairs.len()) {
                let edges: Vec<(usize, usize, u64)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &(u, v))| (u, v, 1))
                    .collect();
                graphs.push(WeightedGraph::new(n, &edges).unwrap());
            }
        }
        for s in 0..4 {
            graphs.push(gen::erdos_renyi(5, 0.5, s));
            graphs.push(gen::erdos_renyi(6, 0.5, s));
        }
        for g in &graphs {
            let sk = build_sketch(&g, 0.25, 7).unwrap();
            assert!(sk.alpha >= g.n() as u64);
            assert!(sk.is_fully_exact());
            let x: Vec<f64> = (0..g.n()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let exact = g.quadratic_form(&x).unwrap();
            let est = sk.eval(&x).unwrap();
            assert!((est - exact).abs() <= 1e-10 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn eval_sketch_ones_vector_is_zero() {
        let g = gen::erdos_renyi(32, 0.2, 5);
        let sk = build_sketch(&g, 0.25, 2).unwrap();
        assert!(sk.eval(&vec![1.0; 32]).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn eval_sketch_dimension_error() {
        let g = gen::clique(4);
        let sk = build_sketch(&g, 0.25, 2).unwrap();
        assert!(matches!(
            sk.eval(&[1.0, 2.0]),
            Err(Error::Dimension { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn shift_invariance_within_roundoff() {
        let g = gen::weighted_random(24, 0.3, 9, 4);
        let sk = build_sketch_with_params(
            &g,
            0.25,
            3,
            SketchParams {
                c_alpha: 1e-3,
                ..Default::default()
            },
        )
        .unwrap();
        let mut rng = seed::rng(8);
        for _ in 0..20 {
            let x: Vec<f64> = (0..24).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let t = rng.random::<f64>() * 20.0 - 10.0;
            let shifted: Vec<f64> = x.iter().map(|&v| v + t).collect();
            let a = sk.eval(&x).unwrap();
            let b = sk.eval(&shifted).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "a {a} b {b}");
        }
    }

    #[test]
    fn determinism_same_seed_same_sketch() {
        let g = gen::erdos_renyi(40, 0.2, 6);
        let a = build_sketch(&g, 0.25, 11).unwrap();
        let b = build_sketch(&g, 0.25, 11).unwrap();
        assert_eq!(a, b);
        let x: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        assert_eq!(a.eval(&x).unwrap().to_bits(), b.eval(&x).unwrap().to_bits());
    }

    #[test]
    fn boosted_single_copy_matches_eval() {
        let g = gen::clique(8);
        let sks = build_sketch_bundle(&g, 0.25, 1, 5, SketchParams::default()).unwrap();
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(
            boosted_eval(&sks, &x).unwrap().to_bits(),
            eval_sketch(&sks[0], &x).unwrap().to_bits()
        );
    }

    #[test]
    fn boosted_median_two_exact_one_sampled() {
        let g = gen::clique(8);
        // Two exact copies and one aggressively sampled copy.
        let exact_a = build_sketch(&g, 0.25, 1).unwrap();
        let exact_b = build_sketch(&g, 0.25, 2).unwrap();
        let sampled = build_sketch_with_params(
            &g,
            0.25,
            3,
            SketchParams {
                c_alpha: 1e-4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(exact_a.is_fully_exact() && exact_b.is_fully_exact());
        assert!(!sampled.is_fully_exact());
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).cos()).collect();
        let exact_val = exact_a.eval(&x).unwrap();
        let boosted = boosted_eval(&[exact_a.clone(), sampled, exact_b], &x).unwrap();
        assert_eq!(boosted.to_bits(), exact_val.to_bits());
    }

    #[test]
    fn stored_items_track_alpha_in_sampling_regime() {
        // In the sampling regime (alpha below every degree) the item count
        // is exactly n * alpha.
        let g = gen::erdos_renyi(64, 0.6, 9);
        let min_deg = g.degrees().into_iter().min().unwrap();
        for alpha in [2u64, 4, 8] {
            assert!(alpha < min_deg);
            let sk = build_sketch_with_params(
                &g,
                0.25,
                3,
                SketchParams {
                    c_alpha: alpha as f64 * 0.25 / (64f64.log2()).powf(4.5) * (1.0 - 1e-12),
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(sk.alpha, alpha);
            assert_eq!(sk.stored_items(), 64 * alpha as usize);
        }
    }
}
