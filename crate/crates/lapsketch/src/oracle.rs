//! Brute-force ground truth: dense eigendecomposition pseudoinverse,
//! exhaustive conductance, a Cheeger-inequality checker, the
//! Johnson-Lindenstrauss resistance baseline, and Monte-Carlo statistics
//! harnesses. Everything here may be O(n^3) or O(2^n); it exists to verify
//! the fast paths, not to compete with them.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::graph::WeightedGraph;
use crate::{seed, Error, Result};

/// Relative eigenvalue cutoff: eigenvalues below `RANK_TOL * λ_max` are
/// treated as zero when inverting. Desk-scale graphs have well-separated
/// spectra, so the cutoff is uncritical.
pub const RANK_TOL: f64 = 1e-9;

/// Largest `n` for which exhaustive cut enumeration is allowed.
pub const EXHAUSTIVE_LIMIT: usize = 22;

/// Dense Laplacian of a weighted graph.
pub fn dense_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for e in g.edges() {
        let w = e.w as f64;
        l[(e.u, e.u)] += w;
        l[(e.v, e.v)] += w;
        l[(e.u, e.v)] -= w;
        l[(e.v, e.u)] -= w;
    }
    l
}

/// Dense normalized Laplacian `D^{-1/2} L D^{-1/2}`; isolated vertices get
/// zero rows and columns.
pub fn dense_normalized_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.n();
    let deg = g.degrees();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0 { 1.0 / (d as f64).sqrt() } else { 0.0 })
        .collect();
    let mut nl = DMatrix::zeros(n, n);
    for u in 0..n {
        if deg[u] > 0 {
            nl[(u, u)] = 1.0;
        }
    }
    for e in g.edges() {
        let v = -(e.w as f64) * inv_sqrt[e.u] * inv_sqrt[e.v];
        nl[(e.u, e.v)] = v;
        nl[(e.v, e.u)] = v;
    }
    nl
}

/// Eigendecomposition of a symmetric matrix with eigenvalues ascending.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix via
/// eigendecomposition, zeroing eigenvalues below `RANK_TOL * λ_max`.
pub fn dense_pseudoinverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sorted_symmetric_eigen(m);
    pseudoinverse_from_eigen(&vals, &vecs)
}

fn pseudoinverse_from_eigen(vals: &DVector<f64>, vecs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = vals.len();
    let lam_max = vals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let tol = RANK_TOL * lam_max;
    let inv = DVector::from_iterator(
        n,
        vals.iter().map(|&l| if l > tol { 1.0 / l } else { 0.0 }),
    );
    let scaled = DMatrix::from_fn(n, n, |r, c| vecs[(r, c)] * inv[c]);
    &scaled * vecs.transpose()
}

/// Exact spectral ground truth for one graph: dense Laplacian, its
/// eigendecomposition, and the pseudoinverse.
#[derive(Debug, Clone)]
pub struct DenseOracle {
    n: usize,
    lap: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    pinv: DMatrix<f64>,
    components: Vec<Vec<usize>>,
}

impl DenseOracle {
    pub fn new(g: &WeightedGraph) -> Self {
        let lap = dense_laplacian(g);
        let (eigenvalues, eigenvectors) = sorted_symmetric_eigen(&lap);
        let pinv = pseudoinverse_from_eigen(&eigenvalues, &eigenvectors);
        Self {
            n: g.n(),
            lap,
            eigenvalues,
            eigenvectors,
            pinv,
            components: g.connected_components(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.lap
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn pseudoinverse(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    fn check_range(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: b.len(),
            });
        }
        let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let tol = 1e-7 * norm.max(f64::MIN_POSITIVE);
        for (ci, comp) in self.components.iter().enumerate() {
            let mass: f64 = comp.iter().map(|&u| b[u]).sum();
            if mass.abs() > tol {
                return Err(Error::RangeViolation {
                    component: ci,
                    residual: mass.abs(),
                    tol,
                });
            }
        }
        Ok(())
    }

    /// Exact `b^T L^+ b`, summing over the nonzero eigenspace.
    pub fn pinv_quadratic(&self, b: &[f64]) -> Result<f64> {
        self.check_range(b)?;
        let bv = DVector::from_column_slice(b);
        let lam_max = self
            .eigenvalues
            .iter()
            .fold(0.0f64, |a, &l| a.max(l.abs()));
        let tol = RANK_TOL * lam_max;
        let mut total = 0.0;
        for i in 0..self.n {
            let lam = self.eigenvalues[i];
            if lam > tol {
                let proj = self.eigenvectors.column(i).dot(&bv);
                total += proj * proj / lam;
            }
        }
        Ok(total)
    }

    /// Exact `L^+ b` (projects away any kernel mass in `b`).
    pub fn pinv_apply(&self, b: &[f64]) -> Vec<f64> {
        let bv = DVector::from_column_slice(b);
        let out = &self.pinv * bv;
        out.iter().copied().collect()
    }

    /// Exact effective resistance between `u` and `v`; `+inf` across
    /// components.
    pub fn resistance(&self, u: usize, v: usize) -> f64 {
        if u == v {
            return 0.0;
        }
        let cu = self.components.iter().position(|c| c.binary_search(&u).is_ok());
        let cv = self.components.iter().position(|c| c.binary_search(&v).is_ok());
        if cu != cv {
            return f64::INFINITY;
        }
        self.pinv[(u, u)] + self.pinv[(v, v)] - 2.0 * self.pinv[(u, v)]
    }

    /// Project `b` onto the range of the Laplacian: remove the mean on
    /// every connected component.
    pub fn project_to_range(&self, b: &[f64]) -> Vec<f64> {
        let mut out = b.to_vec();
        for comp in &self.components {
            let mean: f64 = comp.iter().map(|&u| b[u]).sum::<f64>() / comp.len() as f64;
            for &u in comp {
                out[u] -= mean;
            }
        }
        out
    }
}

/// Range of generalized Rayleigh quotients `x^T B x / x^T A x` over the
/// nonzero eigenspace of `A` (both symmetric PSD with the same kernel):
/// returns `(min, max)` of the pencil eigenvalues. A sparsifier guarantee
/// `(1+γ)^{-1} A ⪯ B ⪯ (1+γ) A` is exactly this range landing in
/// `[(1+γ)^{-1}, 1+γ]`.
pub fn sandwich_range(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (f64, f64) {
    let (vals, vecs) = sorted_symmetric_eigen(a);
    let n = a.nrows();
    let lam_max = vals.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let tol = RANK_TOL * lam_max;
    let cols: Vec<usize> = (0..n).filter(|&i| vals[i] > tol).collect();
    let mut basis = DMatrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        let scaled = vecs.column(i) / vals[i].sqrt();
        basis.set_column(j, &scaled);
    }
    let reduced = basis.transpose() * b * &basis;
    let (pencil, _) = sorted_symmetric_eigen(&reduced);
    (pencil[0], pencil[pencil.len() - 1])
}

/// Exact conductance by enumerating all proper cuts (Gray-code order, so
/// each step flips one vertex). Only for `n <= EXHAUSTIVE_LIMIT`.
pub fn exhaustive_conductance(g: &WeightedGraph) -> Result<f64> {
    let n = g.n();
    if n < 2 {
        return Err(Error::Domain(
            "conductance needs at least 2 vertices".into(),
        ));
    }
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::Domain(format!(
            "n = {n} exceeds exhaustive enumeration limit {EXHAUSTIVE_LIMIT}; use sampled certification"
        )));
    }
    let deg = g.degrees();
    let adj = g.adjacency();
    let vol_total: u64 = deg.iter().sum();

    // Vertex 0 stays on the S side; Gray code walks the other n-1.
    let mut side = vec![false; n];
    side[0] = true;
    let mut vol_s = deg[0];
    let mut crossing = deg[0] as i64;
    let mut best = conductance_value(crossing, vol_s, vol_total);

    let steps = 1u64 << (n - 1);
    let mut gray_prev = 0u64;
    for i in 1..steps {
        let gray = i ^ (i >> 1);
        let flipped = (gray ^ gray_prev).trailing_zeros() as usize + 1;
        gray_prev = gray;
        // Weight from `flipped` into the current S side.
        let w_to_s: u64 = adj[flipped]
            .iter()
            .filter(|&&(v, _)| side[v])
            .map(|&(_, w)| w)
            .sum();
        if side[flipped] {
            side[flipped] = false;
            vol_s -= deg[flipped];
            // Leaving S: edges to S\{flipped} now cross; edges to outside no longer do.
            let w_to_rest = w_to_s - 0; // flipped had no self edge
            crossing += 2 * w_to_rest as i64 - deg[flipped] as i64;
        } else {
            side[flipped] = true;
            vol_s += deg[flipped];
            crossing += deg[flipped] as i64 - 2 * w_to_s as i64;
        }
        let phi = conductance_value(crossing, vol_s, vol_total);
        if phi < best {
            best = phi;
        }
    }
    Ok(best)
}

fn conductance_value(crossing: i64, vol_s: u64, vol_total: u64) -> f64 {
    debug_assert!(crossing >= 0);
    let min_vol = vol_s.min(vol_total - vol_s);
    if min_vol == 0 {
        f64::INFINITY
    } else {
        crossing as f64 / min_vol as f64
    }
}

/// Both sides of the Cheeger inequality for one graph.
#[derive(Debug, Clone, Copy)]
pub struct CheegerReport {
    pub lambda2: f64,
    pub phi: f64,
    pub holds: bool,
}

/// Check `λ_2(N) >= Φ^2 / 2` exactly (dense eigensolve + exhaustive cuts).
pub fn cheeger_check(g: &WeightedGraph) -> Result<CheegerReport> {
    if g.connected_components().len() != 1 {
        return Err(Error::Domain("cheeger check needs a connected graph".into()));
    }
    let phi = exhaustive_conductance(g)?;
    let nl = dense_normalized_laplacian(g);
    let (vals, _) = sorted_symmetric_eigen(&nl);
    let lambda2 = vals[1];
    Ok(CheegerReport {
        lambda2,
        phi,
        holds: lambda2 >= phi * phi / 2.0 - 1e-12,
    })
}

/// The Johnson-Lindenstrauss resistance baseline: project the rows of
/// `B L^+` with a `k x m` random sign matrix and read resistances off as
/// squared column distances. `k = ceil(24 ln n / eps^2)`; the stored
/// object is the `k x n` projected matrix.
#[derive(Debug, Clone)]
pub struct JlBaseline {
    pub projected: DMatrix<f64>,
    pub k: usize,
}

impl JlBaseline {
    pub fn resistance(&self, u: usize, v: usize) -> f64 {
        let d = self.projected.column(u) - self.projected.column(v);
        d.norm_squared()
    }

    /// Floats stored by the baseline: `k * n`.
    pub fn stored_floats(&self) -> usize {
        self.projected.nrows() * self.projected.ncols()
    }
}

pub fn jl_dimension(n: usize, epsilon: f64) -> usize {
    ((24.0 * (n.max(2) as f64).ln()) / (epsilon * epsilon)).ceil() as usize
}

pub fn jl_baseline_resistances(g: &WeightedGraph, epsilon: f64, master_seed: u64) -> JlBaseline {
    let k = jl_dimension(g.n(), epsilon);
    let m = g.m();
    let mut rng = seed::rng(seed::derive(master_seed, b"jl-baseline"));
    let scale = 1.0 / (k as f64).sqrt();
    let proj = DMatrix::from_fn(k, m, |_, _| {
        if rng.random::<bool>() {
            scale
        } else {
            -scale
        }
    });
    jl_baseline_with_projection(g, &proj)
}

/// JL baseline with a caller-supplied `k x m` projection; with orthonormal
/// rows spanning R^m the estimate is exact.
pub fn jl_baseline_with_projection(g: &WeightedGraph, proj: &DMatrix<f64>) -> JlBaseline {
    let oracle = DenseOracle::new(g);
    let n = g.n();
    let m = g.m();
    assert_eq!(proj.ncols(), m, "projection must have m columns");
    // Incidence rows scaled by sqrt(w): L = B^T B.
    let mut b = DMatrix::zeros(m, n);
    for (row, e) in g.edges().iter().enumerate() {
        let s = (e.w as f64).sqrt();
        b[(row, e.u)] = s;
        b[(row, e.v)] = -s;
    }
    let projected = proj * b * oracle.pseudoinverse();
    JlBaseline {
        projected,
        k: proj.nrows(),
    }
}

/// Sample moments of a seeded estimator.
#[derive(Debug, Clone, Copy)]
pub struct McStats {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Independent-seed sample mean/variance/standard error. Seeds are derived
/// from `base_seed` and the trial index, so results are reproducible and
/// trials parallelize freely.
pub fn monte_carlo_stats(
    estimator: impl Fn(u64) -> f64 + Sync,
    trials: usize,
    base_seed: u64,
) -> McStats {
    assert!(trials >= 2, "need at least 2 trials for a variance");
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| estimator(seed::derive_indexed(base_seed, "mc-trial", &[t as u64])))
        .collect();
    let mean = values.iter().sum::<f64>() / trials as f64;
    let variance =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (trials as f64 - 1.0);
    McStats {
        mean,
        variance,
        stderr: (variance / trials as f64).sqrt(),
        trials,
    }
}
