//! Deterministic graph generators for test corpora and the CLI.

use rand::Rng;

use crate::graph::WeightedGraph;
use crate::{seed, Error, Result};

/// Complete graph `K_n`, unit weights.
pub fn clique(n: usize) -> WeightedGraph {
    let mut edges = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v, 1));
        }
    }
    WeightedGraph::new(n, &edges).expect("clique edges are valid")
}

/// Cycle `C_n`, unit weights.
pub fn cycle(n: usize) -> WeightedGraph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    let edges: Vec<_> = (0..n).map(|u| (u, (u + 1) % n, 1)).collect();
    WeightedGraph::new(n, &edges).expect("cycle edges are valid")
}

/// Path `P_n` on `n` vertices, unit weights.
pub fn path(n: usize) -> WeightedGraph {
    let edges: Vec<_> = (0..n.saturating_sub(1)).map(|u| (u, u + 1, 1)).collect();
    WeightedGraph::new(n, &edges).expect("path edges are valid")
}

/// Star `K_{1,k}`: center 0, leaves `1..=k`.
pub fn star(k: usize) -> WeightedGraph {
    let edges: Vec<_> = (1..=k).map(|v| (0, v, 1)).collect();
    WeightedGraph::new(k + 1, &edges).expect("star edges are valid")
}

/// Two `K_k` cliques joined by a single bridge edge.
pub fn dumbbell(k: usize) -> WeightedGraph {
    assert!(k >= 2, "dumbbell cliques need at least 2 vertices");
    let mut edges = Vec::new();
    for u in 0..k {
        for v in (u + 1)..k {
            edges.push((u, v, 1));
            edges.push((k + u, k + v, 1));
        }
    }
    edges.push((k - 1, k, 1));
    WeightedGraph::new(2 * k, &edges).expect("dumbbell edges are valid")
}

/// A star whose center also belongs to a clique: `leaves` pendant vertices
/// on vertex 0, which is part of a `K_clique` on `0..clique`.
pub fn star_clique(leaves: usize, clique_size: usize) -> WeightedGraph {
    assert!(clique_size >= 2);
    let mut edges = Vec::new();
    for u in 0..clique_size {
        for v in (u + 1)..clique_size {
            edges.push((u, v, 1));
        }
    }
    for l in 0..leaves {
        edges.push((0, clique_size + l, 1));
    }
    WeightedGraph::new(clique_size + leaves, &edges).expect("star-clique edges are valid")
}

/// Erdős–Rényi `G(n, p)`, unit weights, deterministic per seed.
pub fn erdos_renyi(n: usize, p: f64, master_seed: u64) -> WeightedGraph {
    let mut rng = seed::rng(seed::derive(master_seed, b"gen-erdos-renyi"));
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((u, v, 1));
            }
        }
    }
    WeightedGraph::new(n, &edges).expect("generated edges are valid")
}

/// Random `d`-regular graph via the pairing model with rejection;
/// deterministic per seed. Requires `n * d` even and `d < n`.
pub fn random_regular(n: usize, d: usize, master_seed: u64) -> Result<WeightedGraph> {
    if n * d % 2 != 0 {
        return Err(Error::Domain(format!(
            "n*d must be even for a {d}-regular graph on {n} vertices"
        )));
    }
    if d >= n {
        return Err(Error::Domain(format!(
            "degree {d} too large for {n} vertices"
        )));
    }
    let mut rng = seed::rng(seed::derive(master_seed, b"gen-random-regular"));
    'attempt: for _ in 0..1000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat(u).take(d)).collect();
        // Fisher-Yates shuffle, then pair consecutive stubs.
        for i in (1..stubs.len()).rev() {
            let j = rng.random_range(0..=i);
            stubs.swap(i, j);
        }
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v {
                continue 'attempt;
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                continue 'attempt;
            }
            edges.push((key.0, key.1, 1));
        }
        return WeightedGraph::new(n, &edges);
    }
    Err(Error::Domain(format!(
        "pairing model failed to produce a simple {d}-regular graph on {n} vertices"
    )))
}

/// `G(n, p)` with independent integer weights uniform in `1..=w_max`.
pub fn weighted_random(n: usize, p: f64, w_max: u64, master_seed: u64) -> WeightedGraph {
    let mut rng = seed::rng(seed::derive(master_seed, b"gen-weighted-random"));
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((u, v, rng.random_range(1..=w_max)));
            }
        }
    }
    WeightedGraph::new(n, &edges).expect("generated edges are valid")
}

/// Uniform random labelled tree (random Prüfer sequence), unit weights.
pub fn random_tree(n: usize, master_seed: u64) -> WeightedGraph {
    assert!(n >= 1);
    if n == 1 {
        return WeightedGraph::new(1, &[]).unwrap();
    }
    if n == 2 {
        return WeightedGraph::new(2, &[(0, 1, 1)]).unwrap();
    }
    let mut rng = seed::rng(seed::derive(master_seed, b"gen-random-tree"));
    let prufer: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &v in &prufer {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut leaf_heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
        .filter(|&v| degree[v] == 1)
        .map(std::cmp::Reverse)
        .collect();
    for &v in &prufer {
        let std::cmp::Reverse(leaf) = leaf_heap.pop().expect("tree always has a leaf");
        edges.push((leaf.min(v), leaf.max(v), 1));
        degree[leaf] -= 1;
        degree[v] -= 1;
        if degree[v] == 1 {
            leaf_heap.push(std::cmp::Reverse(v));
        }
    }
    let remaining: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    assert_eq!(remaining.len(), 2);
    edges.push((remaining[0], remaining[1], 1));
    WeightedGraph::new(n, &edges).expect("tree edges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clique_and_path_sizes() {
        assert_eq!(clique(4).m(), 6);
        assert_eq!(path(3).m(), 2);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = erdos_renyi(128, 0.2, 7);
        let b = erdos_renyi(128, 0.2, 7);
        assert_eq!(a, b);
        let c = erdos_renyi(128, 0.2, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn random_regular_has_exact_degrees() {
        let g = random_regular(16, 3, 3).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 3));
    }

    #[test]
    fn random_regular_rejects_odd_product() {
        assert!(random_regular(5, 3, 1).is_err());
    }

    #[test]
    fn random_tree_is_spanning_and_acyclic() {
        let t = random_tree(20, 5);
        assert_eq!(t.m(), 19);
        assert_eq!(t.connected_components().len(), 1);
    }

    #[test]
    fn dumbbell_shape() {
        let g = dumbbell(8);
        assert_eq!(g.n(), 16);
        assert_eq!(g.m(), 2 * 28 + 1);
    }
}
