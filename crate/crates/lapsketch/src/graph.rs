//! Canonical graph representations and exact Laplacian arithmetic.
//!
//! [`WeightedGraph`] is the ingest type: undirected, positive integer
//! weights, dense 0-based vertex ids, no self-loops, parallel edges merged.
//! Integer weights make the bit-level decomposition exact:
//! `L_G = Σ_i 2^{i-1} L_{G_i}` where level `i` holds the edges whose weight
//! has bit `i` set.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::kahan::KahanSum;
use crate::{seed, Error, Result};

/// Hard ceiling on edge weights regardless of configuration; keeps every
/// weight and bit-level multiplier exactly representable in f64.
pub const WEIGHT_HARD_CAP: u64 = 1 << 53;

/// Ingest configuration for [`WeightedGraph`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Weights must satisfy `w <= n^max_weight_exponent` (polynomially
    /// bounded). The exponent is configuration because no single constant
    /// is canonical.
    pub max_weight_exponent: u32,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            max_weight_exponent: 8,
        }
    }
}

impl GraphConfig {
    /// Maximum admissible weight for a graph on `n` vertices.
    pub fn max_weight(&self, n: usize) -> u64 {
        let cap = (n.max(2) as u128).saturating_pow(self.max_weight_exponent);
        cap.min(WEIGHT_HARD_CAP as u128) as u64
    }
}

/// One undirected edge with canonical endpoint order `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub u: usize,
    pub v: usize,
    pub w: u64,
}

/// Undirected integer-weighted graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<WeightedEdge>,
}

impl WeightedGraph {
    /// Build a graph from an edge list, merging parallel edges by weight
    /// addition. Rejects self-loops, zero weights, out-of-range endpoints,
    /// and weights above the configured polynomial bound.
    pub fn new(n: usize, edges: &[(usize, usize, u64)]) -> Result<Self> {
        Self::with_config(n, edges, GraphConfig::default())
    }

    pub fn with_config(n: usize, edges: &[(usize, usize, u64)], cfg: GraphConfig) -> Result<Self> {
        let mut canon: Vec<WeightedEdge> = Vec::with_capacity(edges.len());
        for &(u, v, w) in edges {
            if u == v {
                return Err(Error::Ingest(format!("self-loop at vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::Ingest(format!(
                    "edge ({u}, {v}) outside vertex range 0..{n}"
                )));
            }
            if w == 0 {
                return Err(Error::Ingest(format!("zero weight on edge ({u}, {v})")));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            canon.push(WeightedEdge { u: a, v: b, w });
        }
        canon.sort_by_key(|e| (e.u, e.v));
        let mut merged: Vec<WeightedEdge> = Vec::with_capacity(canon.len());
        for e in canon {
            match merged.last_mut() {
                Some(last) if last.u == e.u && last.v == e.v => {
                    last.w = last.w.checked_add(e.w).ok_or_else(|| {
                        Error::Ingest(format!("weight overflow on edge ({}, {})", e.u, e.v))
                    })?;
                }
                _ => merged.push(e),
            }
        }
        let max_w = cfg.max_weight(n);
        for e in &merged {
            if e.w > max_w {
                return Err(Error::Ingest(format!(
                    "weight {} on edge ({}, {}) exceeds bound {} (n^{})",
                    e.w, e.u, e.v, max_w, cfg.max_weight_exponent
                )));
            }
        }
        Ok(Self { n, edges: merged })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    /// Weighted degree of every vertex.
    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n];
        for e in &self.edges {
            deg[e.u] += e.w;
            deg[e.v] += e.w;
        }
        deg
    }

    /// Total edge weight.
    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Neighbor lists with weights, sorted by neighbor id.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        adj
    }

    /// Exact Laplacian quadratic form `x^T L x = Σ w (x_u − x_v)^2`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut acc = KahanSum::new();
        for e in &self.edges {
            let d = x[e.u] - x[e.v];
            acc.add(e.w as f64 * d * d);
        }
        Ok(acc.value())
    }

    /// Decompose into unweighted bit-level graphs: level `i` contains edge
    /// `(u, v)` iff bit `i` (1-indexed from the least significant) of the
    /// weight is set, so `L_G = Σ 2^{i-1} L_{G_i}` exactly. Empty levels
    /// are omitted; the level index is carried on each entry.
    pub fn bit_bucket(&self) -> Vec<LevelGraph> {
        let max_w = self.edges.iter().map(|e| e.w).max().unwrap_or(0);
        if max_w == 0 {
            return Vec::new();
        }
        let levels = 64 - max_w.leading_zeros();
        let mut out = Vec::new();
        for i in 1..=levels {
            let bit = 1u64 << (i - 1);
            let edges: Vec<(usize, usize)> = self
                .edges
                .iter()
                .filter(|e| e.w & bit != 0)
                .map(|e| (e.u, e.v))
                .collect();
            if !edges.is_empty() {
                out.push(LevelGraph {
                    level: i,
                    graph: UnweightedGraph {
                        n: self.n,
                        edges,
                    },
                });
            }
        }
        out
    }

    /// Total weight crossing the cut.
    pub fn cut_weight(&self, side: &[bool]) -> u64 {
        self.edges
            .iter()
            .filter(|e| side[e.u] != side[e.v])
            .map(|e| e.w)
            .sum()
    }

    /// Conductance of a proper cut: crossing weight over the smaller side
    /// volume. Returns `+inf` when the smaller side has volume zero.
    pub fn cut_conductance(&self, cut: &CutSpec) -> Result<f64> {
        let side = cut.side_mask(self.n)?;
        let deg = self.degrees();
        let mut vol_s = 0u64;
        for (u, &in_s) in side.iter().enumerate() {
            if in_s {
                vol_s += deg[u];
            }
        }
        let vol_total: u64 = deg.iter().sum();
        let crossing = self.cut_weight(&side);
        let min_vol = vol_s.min(vol_total - vol_s);
        if min_vol == 0 {
            return Ok(f64::INFINITY);
        }
        Ok(crossing as f64 / min_vol as f64)
    }

    /// Maximal connected vertex sets, ordered by smallest contained id;
    /// each set sorted ascending. Isolated vertices form singletons.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        components_from_adjacency(self.n, |u| adj[u].clone())
    }

    /// Subgraph induced on `s`, plus the local→global index map (the
    /// sorted vertex list): local vertex `i` is global `map[i]`.
    pub fn induced_subgraph(&self, s: &[usize]) -> Result<(WeightedGraph, Vec<usize>)> {
        let map = normalize_vertex_set(s, self.n)?;
        let mut local = vec![usize::MAX; self.n];
        for (i, &g) in map.iter().enumerate() {
            local[g] = i;
        }
        let edges: Vec<WeightedEdge> = self
            .edges
            .iter()
            .filter(|e| local[e.u] != usize::MAX && local[e.v] != usize::MAX)
            .map(|e| WeightedEdge {
                u: local[e.u],
                v: local[e.v],
                w: e.w,
            })
            .collect();
        Ok((
            WeightedGraph {
                n: map.len(),
                edges,
            },
            map,
        ))
    }

    /// Stable content fingerprint of `(n, edges)`.
    pub fn content_hash(&self) -> u64 {
        let words = std::iter::once(self.n as u64).chain(
            self.edges
                .iter()
                .flat_map(|e| [e.u as u64, e.v as u64, e.w]),
        );
        seed::hash_words("weighted-graph", words)
    }
}

/// Unweighted undirected graph (all weights 1) on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnweightedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl UnweightedGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<(usize, usize, u64)> = edges.iter().map(|&(u, v)| (u, v, 1)).collect();
        let g = WeightedGraph::new(n, &weighted)?;
        Ok(Self::from_weighted_support(&g))
    }

    /// Edge support of a weighted graph with weights dropped.
    pub fn from_weighted_support(g: &WeightedGraph) -> Self {
        Self {
            n: g.n,
            edges: g.edges.iter().map(|e| (e.u, e.v)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut acc = KahanSum::new();
        for &(u, v) in &self.edges {
            let d = x[u] - x[v];
            acc.add(d * d);
        }
        Ok(acc.value())
    }

    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        components_from_adjacency(self.n, |u| adj[u].clone())
    }

    pub fn induced_subgraph(&self, s: &[usize]) -> Result<(UnweightedGraph, Vec<usize>)> {
        let map = normalize_vertex_set(s, self.n)?;
        let mut local = vec![usize::MAX; self.n];
        for (i, &g) in map.iter().enumerate() {
            local[g] = i;
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|&&(u, v)| local[u] != usize::MAX && local[v] != usize::MAX)
            .map(|&(u, v)| (local[u], local[v]))
            .collect();
        Ok((
            UnweightedGraph {
                n: map.len(),
                edges,
            },
            map,
        ))
    }

    pub fn cut_conductance(&self, cut: &CutSpec) -> Result<f64> {
        self.to_weighted().cut_conductance(cut)
    }

    pub fn to_weighted(&self) -> WeightedGraph {
        WeightedGraph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|&(u, v)| WeightedEdge { u, v, w: 1 })
                .collect(),
        }
    }
}

/// One unweighted bit level of a weighted graph. The vertex set is the
/// parent's; `level` is the 1-indexed bit position, contributing weight
/// `2^{level-1}` in the reconstruction identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelGraph {
    pub level: u32,
    pub graph: UnweightedGraph,
}

impl LevelGraph {
    /// Weight this level contributes per edge: `2^{level-1}`.
    pub fn weight(&self) -> f64 {
        (1u64 << (self.level - 1)) as f64
    }
}

/// A proper cut, given by one side of the bipartition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutSpec {
    side: Vec<usize>,
}

impl CutSpec {
    pub fn new(side: Vec<usize>) -> Self {
        Self { side }
    }

    pub fn side(&self) -> &[usize] {
        &self.side
    }

    /// Membership mask, validating the cut is proper (neither empty nor
    /// the full vertex set).
    pub fn side_mask(&self, n: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; n];
        let mut count = 0usize;
        for &u in &self.side {
            if u >= n {
                return Err(Error::Domain(format!("cut vertex {u} outside 0..{n}")));
            }
            if !mask[u] {
                mask[u] = true;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::Domain("cut side is empty".into()));
        }
        if count == n {
            return Err(Error::Domain("cut side is the whole vertex set".into()));
        }
        Ok(mask)
    }
}

fn normalize_vertex_set(s: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut map: Vec<usize> = s.to_vec();
    map.sort_unstable();
    map.dedup();
    if let Some(&bad) = map.iter().find(|&&u| u >= n) {
        return Err(Error::Domain(format!("vertex {bad} outside 0..{n}")));
    }
    Ok(map)
}

fn components_from_adjacency(n: usize, neighbors: impl Fn(usize) -> Vec<usize>) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for v in neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap()
    }

    #[test]
    fn quadratic_form_single_edge() {
        let g = WeightedGraph::new(2, &[(0, 1, 1)]).unwrap();
        assert_eq!(g.quadratic_form(&[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn quadratic_form_constant_vector_is_zero() {
        let g = triangle();
        assert_eq!(g.quadratic_form(&[3.5, 3.5, 3.5]).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_form_triangle_indicator() {
        let g = triangle();
        assert_eq!(g.quadratic_form(&[1.0, 0.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn quadratic_form_dimension_error() {
        let g = triangle();
        assert!(matches!(
            g.quadratic_form(&[1.0, 0.0]),
            Err(Error::Dimension { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn ingest_rejects_self_loop_and_zero_weight() {
        assert!(matches!(
            WeightedGraph::new(2, &[(1, 1, 1)]),
            Err(Error::Ingest(_))
        ));
        assert!(matches!(
            WeightedGraph::new(2, &[(0, 1, 0)]),
            Err(Error::Ingest(_))
        ));
    }

    #[test]
    fn ingest_merges_parallel_edges() {
        let g = WeightedGraph::new(2, &[(0, 1, 2), (1, 0, 3)]).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(g.edges()[0].w, 5);
    }

    #[test]
    fn bit_bucket_weight_five() {
        let g = WeightedGraph::new(2, &[(0, 1, 5)]).unwrap();
        let levels = g.bit_bucket();
        let idx: Vec<u32> = levels.iter().map(|l| l.level).collect();
        assert_eq!(idx, vec![1, 3]);
        for l in &levels {
            assert_eq!(l.graph.edges(), &[(0, 1)]);
        }
    }

    #[test]
    fn bit_bucket_unit_weights_single_level() {
        let g = triangle();
        let levels = g.bit_bucket();
        assert_eq!(levels.len(), 1);
        assert_eq!(levels[0].level, 1);
        assert_eq!(levels[0].graph.m(), 3);
    }

    #[test]
    fn bit_bucket_reconstructs_quadratic_form() {
        let g = WeightedGraph::new(4, &[(0, 1, 7), (1, 2, 12), (2, 3, 1), (0, 3, 9)]).unwrap();
        let x = [0.3, -1.2, 2.2, 0.9];
        let direct = g.quadratic_form(&x).unwrap();
        let via_levels: f64 = g
            .bit_bucket()
            .iter()
            .map(|l| l.weight() * l.graph.quadratic_form(&x).unwrap())
            .sum();
        assert!((direct - via_levels).abs() <= 1e-9 * direct.abs());
    }

    #[test]
    fn conductance_examples() {
        // C4, two adjacent vertices: 2 crossing edges over volume 4.
        let c4 = WeightedGraph::new(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)]).unwrap();
        let phi = c4.cut_conductance(&CutSpec::new(vec![0, 1])).unwrap();
        assert_eq!(phi, 0.5);

        // K4, one vertex: 3 crossing over volume 3.
        let k4 = crate::gen::clique(4);
        let phi = k4.cut_conductance(&CutSpec::new(vec![0])).unwrap();
        assert_eq!(phi, 1.0);

        // Star K_{1,3}, one leaf: 1 crossing over volume 1.
        let star = crate::gen::star(3);
        let phi = star.cut_conductance(&CutSpec::new(vec![1])).unwrap();
        assert_eq!(phi, 1.0);
    }

    #[test]
    fn conductance_is_symmetric_in_sides() {
        let g = WeightedGraph::new(5, &[(0, 1, 2), (1, 2, 1), (2, 3, 4), (3, 4, 1), (0, 4, 3)])
            .unwrap();
        let a = g.cut_conductance(&CutSpec::new(vec![0, 1])).unwrap();
        let b = g.cut_conductance(&CutSpec::new(vec![2, 3, 4])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conductance_rejects_improper_cuts() {
        let g = triangle();
        assert!(g.cut_conductance(&CutSpec::new(vec![])).is_err());
        assert!(g.cut_conductance(&CutSpec::new(vec![0, 1, 2])).is_err());
    }

    #[test]
    fn conductance_zero_volume_side_is_infinite() {
        // Vertex 3 is isolated: min volume side is 0.
        let g = WeightedGraph::new(4, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let phi = g.cut_conductance(&CutSpec::new(vec![3])).unwrap();
        assert!(phi.is_infinite());
    }

    #[test]
    fn components_edgeless_and_path_and_pairs() {
        let edgeless = WeightedGraph::new(3, &[]).unwrap();
        assert_eq!(
            edgeless.connected_components(),
            vec![vec![0], vec![1], vec![2]]
        );

        let path = WeightedGraph::new(3, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        assert_eq!(path.connected_components(), vec![vec![0, 1, 2]]);

        let pairs = WeightedGraph::new(4, &[(0, 1, 1), (2, 3, 1)]).unwrap();
        assert_eq!(pairs.connected_components(), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn induced_subgraph_examples() {
        let g = triangle();
        let (sub, map) = g.induced_subgraph(&[0, 1]).unwrap();
        assert_eq!(sub.m(), 1);
        assert_eq!(map, vec![0, 1]);

        let (full, map) = g.induced_subgraph(&[0, 1, 2]).unwrap();
        assert_eq!(full, g);
        assert_eq!(map, vec![0, 1, 2]);

        let (single, _) = g.induced_subgraph(&[0]).unwrap();
        assert_eq!(single.n(), 1);
        assert_eq!(single.m(), 0);
    }

    #[test]
    fn content_hash_tracks_content() {
        let g = triangle();
        let h = g.content_hash();
        assert_eq!(h, triangle().content_hash());
        let other = WeightedGraph::new(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 2)]).unwrap();
        assert_ne!(h, other.content_hash());
    }
}
