//! Edge partitioning of bit-level graphs into components certified to sit
//! inside well-connected regions.
//!
//! The partitioner is recursive spectral bisection: estimate the second
//! eigenvector of the normalized Laplacian, sweep it, and if the best
//! sweep cut has conductance below the target, split and recurse on both
//! sides; otherwise certify the piece. A certificate therefore means "no
//! sweep cut below `phi_target` was found", which is weaker than a true
//! conductance bound but is exactly what the downstream accuracy tests
//! measure against.
//!
//! Certified pieces keep their internal edges; crossing edges are retried
//! in the next round. A side with no internal edge would give the cut a
//! quotient of at least 1, so every executed split strictly shrinks the
//! residual and the round loop terminates.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{CutSpec, UnweightedGraph, WeightedGraph};
use crate::{seed, Error, Result};

/// Default conductance target: `1 / (4 log2^2 n)`.
pub fn default_phi_target(n: usize) -> f64 {
    let log = (n.max(2) as f64).log2();
    (1.0 / (4.0 * log * log)).min(0.99)
}

/// Default cap on partition rounds per bit level: `2 ceil(log2 m) + 4`.
pub fn default_round_cap(m: usize) -> u32 {
    2 * (m.max(2) as f64).log2().ceil() as u32 + 4
}

/// Default power-iteration budget: `200 ceil(log2 n)`.
pub fn default_power_iters(n: usize) -> usize {
    200 * (n.max(2) as f64).log2().ceil() as usize
}

/// Tuning knobs for [`split`]; `None` means the scale-dependent default.
#[derive(Debug, Clone, Copy, Default)]
pub struct PartitionParams {
    pub phi_target: Option<f64>,
    pub round_cap: Option<u32>,
    pub power_iters: Option<usize>,
}

/// One emitted component: bit level, round, vertex set in parent
/// coordinates, the component graph in local coordinates, and whether it
/// carries an expander certificate (round-cap overflow components do not).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionEntry {
    pub level: u32,
    pub round: u32,
    pub vertices: Vec<usize>,
    pub component: UnweightedGraph,
    pub certified: bool,
}

/// Edges captured by one round of one bit level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundStat {
    pub level: u32,
    pub round: u32,
    pub edges: usize,
}

/// The full edge partition of a weighted graph across bit levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub n: usize,
    pub phi_target: f64,
    pub entries: Vec<PartitionEntry>,
    pub rounds: Vec<RoundStat>,
}

impl Partition {
    /// Number of rounds used on a bit level.
    pub fn rounds_for_level(&self, level: u32) -> u32 {
        self.rounds
            .iter()
            .filter(|r| r.level == level)
            .map(|r| r.round)
            .max()
            .unwrap_or(0)
    }

    /// `Σ 2^{level-1} x_H^T L_H x_H` over all entries; equals `x^T L_G x`
    /// exactly because the entries partition every bit level's edges.
    pub fn reconstruct_quadratic_form(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for e in &self.entries {
            let local: Vec<f64> = e.vertices.iter().map(|&u| x[u]).collect();
            total += (1u64 << (e.level - 1)) as f64 * e.component.quadratic_form(&local)?;
        }
        Ok(total)
    }
}

/// Unit-norm estimate of the second eigenvector of the normalized
/// Laplacian, via power iteration on `2I − N` with the degree-weighted
/// constant direction deflated. Deterministic given the seed.
pub fn second_eigvec_estimate(g: &UnweightedGraph, iters: usize, seed_val: u64) -> Result<Vec<f64>> {
    let n = g.n();
    if n < 2 {
        return Err(Error::Domain(
            "second eigenvector needs at least 2 vertices".into(),
        ));
    }
    if g.connected_components().len() != 1 {
        return Err(Error::Domain(
            "second eigenvector estimate needs a connected graph".into(),
        ));
    }
    if iters == 0 {
        return Err(Error::Precondition("iters must be >= 1".into()));
    }
    let deg = g.degrees();
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let adj = g.adjacency();

    // Deflation direction: D^{1/2} 1, normalized.
    let vol: f64 = deg.iter().map(|&d| d as f64).sum();
    let phi0: Vec<f64> = deg.iter().map(|&d| ((d as f64) / vol).sqrt()).collect();

    let mut rng = seed::rng(seed_val);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    deflate(&mut v, &phi0);
    normalize(&mut v);

    let mut rayleigh_prev = f64::NAN;
    for _ in 0..iters {
        // w = (2I − N) v = v + D^{-1/2} A D^{-1/2} v.
        let mut w = v.clone();
        for u in 0..n {
            let mut acc = 0.0;
            for &nb in &adj[u] {
                acc += v[nb] * inv_sqrt[nb];
            }
            w[u] += inv_sqrt[u] * acc;
        }
        let rayleigh: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        deflate(&mut w, &phi0);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            // v already spans an eigenvector with 2 − λ = 0 (λ2 = 2).
            break;
        }
        for (a, b) in v.iter_mut().zip(&w) {
            *a = b / norm;
        }
        if rayleigh_prev.is_finite()
            && (rayleigh - rayleigh_prev).abs() <= 1e-8 * rayleigh.abs().max(1e-300)
        {
            break;
        }
        rayleigh_prev = rayleigh;
    }
    Ok(v)
}

fn deflate(v: &mut [f64], dir: &[f64]) {
    let proj: f64 = v.iter().zip(dir).map(|(a, b)| a * b).sum();
    for (a, b) in v.iter_mut().zip(dir) {
        *a -= proj * b;
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in v.iter_mut() {
            *a /= norm;
        }
    }
}

/// Sweep the vertices in order of the `D^{-1/2}`-scaled values and return
/// the minimum-conductance prefix cut. Ties break toward the smaller
/// prefix.
pub fn sweep_cut(g: &UnweightedGraph, order: &[f64]) -> Result<(CutSpec, f64)> {
    let n = g.n();
    if order.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: order.len(),
        });
    }
    if n < 2 {
        return Err(Error::Domain("sweep cut needs at least 2 vertices".into()));
    }
    let deg = g.degrees();
    let adj = g.adjacency();
    let vol_total: u64 = deg.iter().sum();

    let mut idx: Vec<usize> = (0..n).collect();
    let score = |u: usize| {
        if deg[u] > 0 {
            order[u] / (deg[u] as f64).sqrt()
        } else {
            order[u]
        }
    };
    idx.sort_by(|&a, &b| score(a).total_cmp(&score(b)).then(a.cmp(&b)));

    let mut in_s = vec![false; n];
    let mut vol_s = 0u64;
    let mut crossing = 0i64;
    let mut best_phi = f64::INFINITY;
    let mut best_len = 1usize;
    for k in 0..n - 1 {
        let u = idx[k];
        let to_s = adj[u].iter().filter(|&&v| in_s[v]).count() as i64;
        crossing += deg[u] as i64 - 2 * to_s;
        vol_s += deg[u];
        in_s[u] = true;
        let min_vol = vol_s.min(vol_total - vol_s);
        let phi = if min_vol == 0 {
            f64::INFINITY
        } else {
            crossing as f64 / min_vol as f64
        };
        if phi < best_phi {
            best_phi = phi;
            best_len = k + 1;
        }
    }
    Ok((CutSpec::new(idx[..best_len].to_vec()), best_phi))
}

/// Result of one partition round: certified clusters, the edges internal
/// to them, and the crossing edges to retry.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpanderRound {
    pub clusters: Vec<Vec<usize>>,
    pub kept: Vec<(usize, usize)>,
    pub residual: Vec<(usize, usize)>,
}

/// One round of recursive spectral bisection. Every returned cluster
/// admits no sweep cut of conductance below `phi_target`; `kept` are the
/// edges internal to clusters and `residual` the rest, partitioning
/// `E(G)` exactly.
pub fn expander_round(
    g: &UnweightedGraph,
    phi_target: f64,
    seed_val: u64,
    power_iters: Option<usize>,
) -> Result<ExpanderRound> {
    if !(phi_target > 0.0 && phi_target < 1.0) {
        return Err(Error::Precondition(format!(
            "phi_target must lie in (0, 1), got {phi_target}"
        )));
    }
    let mut clusters = Vec::new();
    let mut kept = Vec::new();
    let mut residual = Vec::new();

    let mut queue: VecDeque<Vec<usize>> = g
        .connected_components()
        .into_iter()
        .filter(|c| c.len() >= 2)
        .collect();
    let mut piece_counter = 0u64;
    while let Some(piece) = queue.pop_front() {
        let (local, map) = g.induced_subgraph(&piece)?;
        if local.m() == 0 {
            continue;
        }
        let piece_seed = seed::derive_indexed(seed_val, "piece", &[piece_counter]);
        piece_counter += 1;
        let iters = power_iters.unwrap_or_else(|| default_power_iters(local.n()));
        let eigvec = second_eigvec_estimate(&local, iters, piece_seed)?;
        let (cut, phi) = sweep_cut(&local, &eigvec)?;
        if phi < phi_target {
            let mask = cut.side_mask(local.n())?;
            for &(u, v) in local.edges() {
                if mask[u] != mask[v] {
                    residual.push((map[u], map[v]));
                }
            }
            for keep_side in [true, false] {
                let side: Vec<usize> = (0..local.n()).filter(|&u| mask[u] == keep_side).collect();
                if side.len() < 2 {
                    continue;
                }
                let (side_graph, side_map) = local.induced_subgraph(&side)?;
                for comp in side_graph.connected_components() {
                    if comp.len() >= 2 {
                        queue.push_back(comp.iter().map(|&u| map[side_map[u]]).collect());
                    }
                }
            }
        } else {
            for &(u, v) in local.edges() {
                kept.push((map[u], map[v]));
            }
            clusters.push(piece);
        }
    }
    clusters.sort();
    kept.sort_unstable();
    residual.sort_unstable();
    Ok(ExpanderRound {
        clusters,
        kept,
        residual,
    })
}

/// Partition a weighted graph: bit-bucket it, then repeatedly run
/// [`expander_round`] on each level's residual until it is empty or the
/// round cap is hit, in which case the leftover components are emitted
/// uncertified (the sketch stores those verbatim).
pub fn split(g: &WeightedGraph, phi_target: f64, seed_val: u64) -> Result<Partition> {
    split_with_params(
        g,
        seed_val,
        PartitionParams {
            phi_target: Some(phi_target),
            ..Default::default()
        },
    )
}

pub fn split_with_params(
    g: &WeightedGraph,
    seed_val: u64,
    params: PartitionParams,
) -> Result<Partition> {
    let phi = params.phi_target.unwrap_or_else(|| default_phi_target(g.n()));
    let round_cap = params.round_cap.unwrap_or_else(|| default_round_cap(g.m()));
    let mut entries = Vec::new();
    let mut rounds = Vec::new();

    for lg in g.bit_bucket() {
        let level = lg.level;
        let mut residual = lg.graph.edges().to_vec();
        let mut round = 1u32;
        while !residual.is_empty() {
            if round > round_cap {
                // Round cap reached: flush leftovers without certificates.
                let leftover = UnweightedGraph::new(g.n(), &residual)?;
                let mut flushed = 0usize;
                for comp in leftover.connected_components() {
                    if comp.len() < 2 {
                        continue;
                    }
                    let (component, vertices) = leftover.induced_subgraph(&comp)?;
                    if component.m() == 0 {
                        continue;
                    }
                    flushed += component.m();
                    entries.push(PartitionEntry {
                        level,
                        round,
                        vertices,
                        component,
                        certified: false,
                    });
                }
                rounds.push(RoundStat {
                    level,
                    round,
                    edges: flushed,
                });
                break;
            }
            let work = UnweightedGraph::new(g.n(), &residual)?;
            let round_seed = seed::derive_indexed(seed_val, "round", &[level as u64, round as u64]);
            let result = expander_round(&work, phi, round_seed, params.power_iters)?;
            rounds.push(RoundStat {
                level,
                round,
                edges: result.kept.len(),
            });
            for cluster in &result.clusters {
                let (component, vertices) = work.induced_subgraph(cluster)?;
                if component.m() == 0 {
                    continue;
                }
                entries.push(PartitionEntry {
                    level,
                    round,
                    vertices,
                    component,
                    certified: true,
                });
            }
            residual = result.residual;
            round += 1;
        }
    }
    Ok(Partition {
        n: g.n(),
        phi_target: phi,
        entries,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle;

    #[test]
    fn second_eigvec_single_edge() {
        let g = UnweightedGraph::new(2, &[(0, 1)]).unwrap();
        let v = second_eigvec_estimate(&g, 50, 3).unwrap();
        let expect = 1.0 / 2.0f64.sqrt();
        assert!((v[0].abs() - expect).abs() < 1e-9);
        assert!((v[0] + v[1]).abs() < 1e-9);
    }

    #[test]
    fn second_eigvec_clique_rayleigh_matches_dense_eigensolve() {
        for n in [5usize, 9] {
            let g = UnweightedGraph::from_weighted_support(&gen::clique(n));
            let v = second_eigvec_estimate(&g, 2000, 1).unwrap();
            // Rayleigh quotient of the normalized Laplacian at v.
            let nl = oracle::dense_normalized_laplacian(&g.to_weighted());
            let vv = nalgebra::DVector::from_column_slice(&v);
            let rayleigh = vv.dot(&(&nl * &vv));
            let expect = n as f64 / (n as f64 - 1.0);
            assert!(
                (rayleigh - expect).abs() < 1e-6,
                "rayleigh {rayleigh} vs λ2 {expect}"
            );
        }
    }

    #[test]
    fn second_eigvec_path4_sign_pattern() {
        let g = UnweightedGraph::from_weighted_support(&gen::path(4));
        let v = second_eigvec_estimate(&g, 5000, 7).unwrap();
        // Cross-check against the dense eigensolve: same sign pattern.
        let signs: Vec<bool> = v.iter().map(|&x| x > 0.0).collect();
        assert!(
            signs == [true, true, false, false] || signs == [false, false, true, true],
            "signs {signs:?}"
        );
    }

    #[test]
    fn second_eigvec_rejects_disconnected() {
        let g = UnweightedGraph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(second_eigvec_estimate(&g, 10, 0).is_err());
    }

    #[test]
    fn sweep_cut_p3_matches_exhaustive_oracle() {
        // Every proper cut of P3 has quotient 1 under the min-side-volume
        // definition; the sweep must agree with the exhaustive oracle.
        let g = UnweightedGraph::from_weighted_support(&gen::path(3));
        let exact = oracle::exhaustive_conductance(&g.to_weighted()).unwrap();
        assert!((exact - 1.0).abs() < 1e-12);
        let v = second_eigvec_estimate(&g, 2000, 1).unwrap();
        let (_, phi) = sweep_cut(&g, &v).unwrap();
        assert!((phi - exact).abs() < 1e-9, "sweep {phi} vs exact {exact}");
    }

    #[test]
    fn sweep_cut_k4_matches_exhaustive_oracle() {
        let g = UnweightedGraph::from_weighted_support(&gen::clique(4));
        let exact = oracle::exhaustive_conductance(&g.to_weighted()).unwrap();
        assert!((exact - 2.0 / 3.0).abs() < 1e-12);
        // Any order works on K4: all balanced prefixes tie at 2/3.
        let (_, phi) = sweep_cut(&g, &[0.4, -0.2, 0.1, -0.9]).unwrap();
        assert!((phi - exact).abs() < 1e-9);
    }

    #[test]
    fn sweep_cut_dumbbell_finds_bridge() {
        let g = UnweightedGraph::from_weighted_support(&gen::dumbbell(8));
        let exact = oracle::exhaustive_conductance(&g.to_weighted()).unwrap();
        assert!((exact - 1.0 / 57.0).abs() < 1e-12);
        let v = second_eigvec_estimate(&g, 5000, 2).unwrap();
        let (cut, phi) = sweep_cut(&g, &v).unwrap();
        assert!((phi - exact).abs() < 1e-9);
        let mut side: Vec<usize> = cut.side().to_vec();
        side.sort_unstable();
        assert!(side == (0..8).collect::<Vec<_>>() || side == (8..16).collect::<Vec<_>>());
    }

    #[test]
    fn expander_round_keeps_whole_clique() {
        let g = UnweightedGraph::from_weighted_support(&gen::clique(8));
        // Oracle: conductance of K8 is 4/7, above the 0.1 target.
        let exact = oracle::exhaustive_conductance(&g.to_weighted()).unwrap();
        assert!(exact > 0.1);
        let r = expander_round(&g, 0.1, 5, None).unwrap();
        assert_eq!(r.kept.len(), 28);
        assert!(r.residual.is_empty());
        assert_eq!(r.clusters, vec![(0..8).collect::<Vec<_>>()]);
    }

    #[test]
    fn expander_round_splits_dumbbell_at_bridge() {
        let g = UnweightedGraph::from_weighted_support(&gen::dumbbell(8));
        let r = expander_round(&g, 0.1, 5, None).unwrap();
        assert!(r.residual.contains(&(7, 8)), "bridge must be residual");
        assert_eq!(r.kept.len(), 56);
        assert_eq!(r.residual.len(), 1);
        assert_eq!(r.clusters.len(), 2);
    }

    #[test]
    fn expander_round_empty_graph() {
        let g = UnweightedGraph::new(3, &[]).unwrap();
        let r = expander_round(&g, 0.1, 0, None).unwrap();
        assert!(r.kept.is_empty() && r.residual.is_empty() && r.clusters.is_empty());
    }

    #[test]
    fn expander_round_partitions_edges() {
        let g = UnweightedGraph::from_weighted_support(&gen::erdos_renyi(40, 0.15, 3));
        let r = expander_round(&g, 0.2, 1, None).unwrap();
        let mut all = r.kept.clone();
        all.extend(&r.residual);
        all.sort_unstable();
        let mut expect = g.edges().to_vec();
        expect.sort_unstable();
        assert_eq!(all, expect);
    }

    #[test]
    fn split_unit_clique_single_round() {
        let p = split(&gen::clique(16), 0.1, 9).unwrap();
        assert_eq!(p.entries.len(), 1);
        assert_eq!(p.entries[0].level, 1);
        assert_eq!(p.entries[0].round, 1);
        assert!(p.entries[0].certified);
        assert_eq!(p.rounds_for_level(1), 1);
    }

    #[test]
    fn split_weight3_edge_two_levels() {
        let g = WeightedGraph::new(2, &[(0, 1, 3)]).unwrap();
        let p = split(&g, 0.5, 1).unwrap();
        let mut levels: Vec<u32> = p.entries.iter().map(|e| e.level).collect();
        levels.sort_unstable();
        assert_eq!(levels, vec![1, 2]);
        for e in &p.entries {
            assert_eq!(e.component.m(), 1);
        }
    }

    #[test]
    fn split_dumbbell_two_rounds() {
        let p = split(&gen::dumbbell(8), 0.1, 4).unwrap();
        let round1: Vec<_> = p.entries.iter().filter(|e| e.round == 1).collect();
        let round2: Vec<_> = p.entries.iter().filter(|e| e.round == 2).collect();
        assert_eq!(round1.len(), 2);
        assert_eq!(round2.len(), 1);
        assert_eq!(round2[0].component.m(), 1);
        assert_eq!(round2[0].vertices, vec![7, 8]);
    }

    #[test]
    fn split_reconstructs_quadratic_form() {
        let g = gen::weighted_random(30, 0.2, 37, 8);
        let p = split(&g, default_phi_target(30), 2).unwrap();
        let mut rng = seed::rng(5);
        for _ in 0..20 {
            let x: Vec<f64> = (0..30).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let direct = g.quadratic_form(&x).unwrap();
            let via = p.reconstruct_quadratic_form(&x).unwrap();
            assert!((direct - via).abs() <= 1e-9 * direct.abs().max(1e-12));
        }
    }

    #[test]
    fn split_is_deterministic() {
        let g = gen::erdos_renyi(48, 0.12, 21);
        let a = split(&g, 0.05, 77).unwrap();
        let b = split(&g, 0.05, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_entries_disjoint_within_round() {
        let g = gen::erdos_renyi(48, 0.12, 21);
        let p = split(&g, 0.05, 77).unwrap();
        let mut seen_by_round: std::collections::HashMap<(u32, u32), Vec<usize>> =
            std::collections::HashMap::new();
        for e in &p.entries {
            let bucket = seen_by_round.entry((e.level, e.round)).or_default();
            for &v in &e.vertices {
                assert!(!bucket.contains(&v), "vertex {v} appears twice in a round");
                bucket.push(v);
            }
        }
    }
}
