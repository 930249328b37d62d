//! Spectral sparsification and the implicit approximate-pseudoinverse
//! operator.
//!
//! `build_solver_operator` produces `S = (1/2) N Σ_{k=0}^{z} (I − L' N / 2)^k`
//! where `L'` is a leverage-score sparsifier of the input Laplacian and `N`
//! is a symmetric preconditioner with `(1/2) N^+ ⪯ L' ⪯ 2 N^+`. The series
//! contracts geometrically, so a logarithmic `z` already puts `S` within
//! `(1 ± sqrt(ε))` of `L^+` as a quadratic form.
//!
//! Below `dense_threshold` the preconditioner is the dense pseudoinverse of
//! `L'` (the factor-2 sandwich is then exact); above it, a Chebyshev
//! polynomial in the normalized Laplacian whose sandwich is certified on
//! probe vectors at build time.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::WeightedGraph;
use crate::oracle;
use crate::{seed, Error, Result};

/// Undirected graph with real weights; internal to the solver (the
/// sparsifier reweights edges by inverse keep probabilities).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl RealGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        Self { n, edges }
    }

    pub fn from_weighted(g: &WeightedGraph) -> Self {
        Self {
            n: g.n(),
            edges: g.edges().iter().map(|e| (e.u, e.v, e.w as f64)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for &(u, v, w) in &self.edges {
            deg[u] += w;
            deg[v] += w;
        }
        deg
    }

    /// Laplacian matrix-vector product.
    pub fn laplacian_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(u, v, w) in &self.edges {
            let d = w * (x[u] - x[v]);
            out[u] += d;
            out[v] -= d;
        }
        out
    }

    pub fn dense_laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(u, v, w) in &self.edges {
            l[(u, u)] += w;
            l[(v, v)] += w;
            l[(u, v)] -= w;
            l[(v, u)] -= w;
        }
        l
    }

    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let support: Vec<(usize, usize, u64)> =
            self.edges.iter().map(|&(u, v, _)| (u, v, 1)).collect();
        WeightedGraph::new(self.n, &support)
            .expect("sparsifier support is a valid graph")
            .connected_components()
    }
}

/// Leverage-score sparsifier targeting `(1+γ)^{-1} L ⪯ L' ⪯ (1+γ) L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSparsifier {
    pub graph: RealGraph,
    pub gamma: f64,
}

/// Symmetric preconditioner for the sparsifier Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Preconditioner {
    /// Dense pseudoinverse of `L'`; sandwich factors are exactly 1.
    Dense(DMatrix<f64>),
    /// `D^{-1/2} p(normalized L') D^{-1/2}` with `p` a Chebyshev
    /// approximation of `1/λ` on `[lo, hi]`.
    Chebyshev { coeffs: Vec<f64>, lo: f64, hi: f64 },
}

impl Preconditioner {
    pub fn mode_name(&self) -> &'static str {
        match self {
            Preconditioner::Dense(_) => "dense",
            Preconditioner::Chebyshev { .. } => "chebyshev",
        }
    }
}

/// Tuning for sparsifier and preconditioner construction.
#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    /// Below this vertex count leverages and the preconditioner are dense.
    pub dense_threshold: usize,
    /// Oversampling constant in the keep probability
    /// `min(1, c_s * w_e * R_e * ln n / γ^2)`.
    pub c_s: f64,
    /// Safety margin added to the series length `z`.
    pub z_margin: u32,
    /// Accuracy of the Johnson-Lindenstrauss leverage estimates used above
    /// the dense threshold.
    pub jl_eps: f64,
    /// Relative residual target of the conjugate-gradient solves inside
    /// leverage estimation.
    pub cg_tol: f64,
    /// Probe vectors used to certify the preconditioner sandwich.
    pub probes: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            dense_threshold: 2048,
            c_s: 9.0,
            z_margin: 2,
            jl_eps: 0.25,
            cg_tol: 1e-8,
            probes: 16,
        }
    }
}

/// Series length from the error tolerance: `ceil(4 ln(16 / sqrt(ε)))`.
pub fn solver_z_formula(epsilon: f64) -> u32 {
    (4.0 * (16.0 / epsilon.sqrt()).ln()).ceil() as u32
}

/// Implicit symmetric operator approximating the Laplacian pseudoinverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOperator {
    pub sparsifier: SpectralSparsifier,
    pub precond: Preconditioner,
    pub z: u32,
    pub epsilon: f64,
    /// Connected components of the underlying graph; queries must sum to
    /// zero on each.
    pub components: Vec<Vec<usize>>,
    /// Measured sandwich factors of the preconditioner at build time.
    pub certified_range: (f64, f64),
}

impl SolverOperator {
    /// Apply the preconditioner `N`.
    pub fn apply_precond(&self, v: &[f64]) -> Vec<f64> {
        match &self.precond {
            Preconditioner::Dense(n) => {
                let out = n * DVector::from_column_slice(v);
                out.iter().copied().collect()
            }
            Preconditioner::Chebyshev { coeffs, lo, hi } => chebyshev_apply(
                &self.sparsifier.graph,
                &self.components,
                coeffs,
                *lo,
                *hi,
                v,
            ),
        }
    }

    /// `S b` without the range check; kernel mass in `b` is annihilated by
    /// the final preconditioner application.
    pub fn apply_raw(&self, b: &[f64]) -> Vec<f64> {
        let lap = &self.sparsifier.graph;
        let mut s = b.to_vec();
        for _ in 0..self.z {
            let ns = self.apply_precond(&s);
            let lns = lap.laplacian_apply(&ns);
            for i in 0..s.len() {
                s[i] = b[i] + s[i] - 0.5 * lns[i];
            }
        }
        let ns = self.apply_precond(&s);
        ns.into_iter().map(|v| 0.5 * v).collect()
    }

    /// `S b` for `b` in the range of the Laplacian: per-component sums of
    /// `b` must vanish within `1e-7 * ||b||`.
    pub fn apply(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_range(b)?;
        Ok(self.apply_raw(b))
    }

    pub fn check_range(&self, b: &[f64]) -> Result<()> {
        let n = self.sparsifier.graph.n();
        if b.len() != n {
            return Err(Error::Dimension {
                expected: n,
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

    /// Remove the per-component mean, projecting `b` onto the range.
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

/// Exact leverage scores `w_e R_e` via the dense pseudoinverse.
fn exact_leverages(g: &WeightedGraph) -> Vec<f64> {
    let oracle = oracle::DenseOracle::new(g);
    g.edges()
        .iter()
        .map(|e| e.w as f64 * oracle.resistance(e.u, e.v))
        .collect()
}

/// Leverage estimates via random sign projections of the incidence matrix
/// and conjugate-gradient solves; construction-time tool only.
fn jl_leverages(g: &WeightedGraph, params: &SolverParams, seed_val: u64) -> Vec<f64> {
    let n = g.n();
    let m = g.m();
    let k = oracle::jl_dimension(n, params.jl_eps);
    let components = g.connected_components();
    let lap = RealGraph::from_weighted(g);
    let scale = 1.0 / (k as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|row| {
            let mut rng = seed::rng(seed::derive_indexed(seed_val, "jl-row", &[row as u64]));
            // B^T π for one random sign row π.
            let mut rhs = vec![0.0; n];
            for e in g.edges() {
                let sign = if rng.random::<bool>() { scale } else { -scale };
                let s = sign * (e.w as f64).sqrt();
                rhs[e.u] += s;
                rhs[e.v] -= s;
            }
            // Project onto the range and solve L z = rhs.
            for comp in &components {
                let mean: f64 = comp.iter().map(|&u| rhs[u]).sum::<f64>() / comp.len() as f64;
                for &u in comp {
                    rhs[u] -= mean;
                }
            }
            conjugate_gradient(&lap, &rhs, params.cg_tol)
        })
        .collect();
    (0..m)
        .map(|ei| {
            let (u, v, w) = (g.edges()[ei].u, g.edges()[ei].v, g.edges()[ei].w as f64);
            let r: f64 = rows.iter().map(|z| (z[u] - z[v]) * (z[u] - z[v])).sum();
            w * r
        })
        .collect()
}

fn conjugate_gradient(lap: &RealGraph, b: &[f64], tol: f64) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let b_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut rs = r.iter().map(|v| v * v).sum::<f64>();
    for _ in 0..(4 * n).max(200) {
        if rs.sqrt() <= tol * b_norm {
            break;
        }
        let ap = lap.laplacian_apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = r.iter().map(|v| v * v).sum::<f64>();
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    x
}

/// Leverage-score sparsifier: keep edge `e` with probability
/// `p_e = min(1, c_s w_e R_e ln n / γ^2)`, reweighted `w_e / p_e`.
/// Component structure is preserved (cut edges have leverage 1 and are
/// always kept; a retry guards the unlikely residual cases).
pub fn sparsify(g: &WeightedGraph, gamma: f64, seed_val: u64) -> Result<SpectralSparsifier> {
    sparsify_with_params(g, gamma, seed_val, &SolverParams::default())
}

pub fn sparsify_with_params(
    g: &WeightedGraph,
    gamma: f64,
    seed_val: u64,
    params: &SolverParams,
) -> Result<SpectralSparsifier> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Precondition(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    let n = g.n();
    let leverages = if n <= params.dense_threshold {
        exact_leverages(g)
    } else {
        jl_leverages(g, params, seed::derive(seed_val, b"jl-leverage"))
    };
    let log_n = (n.max(2) as f64).ln();
    let target_components = g.connected_components();
    for attempt in 0..8u64 {
        let mut rng = seed::rng(seed::derive_indexed(seed_val, "sparsify", &[attempt]));
        let mut kept = Vec::new();
        for (e, &tau) in g.edges().iter().zip(&leverages) {
            let p = (params.c_s * tau * log_n / (gamma * gamma)).min(1.0);
            if p >= 1.0 {
                kept.push((e.u, e.v, e.w as f64));
            } else if rng.random::<f64>() < p {
                kept.push((e.u, e.v, e.w as f64 / p));
            }
        }
        let graph = RealGraph::new(n, kept);
        if graph.connected_components() == target_components {
            return Ok(SpectralSparsifier { graph, gamma });
        }
    }
    Err(Error::Certification(
        "sparsifier failed to preserve component structure after 8 attempts".into(),
    ))
}

/// Build a preconditioner with `(1/2) N^+ ⪯ L' ⪯ 2 N^+`, certifying the
/// sandwich on probes; fails with the measured factors otherwise.
pub fn build_preconditioner(
    sparsifier: &SpectralSparsifier,
    params: &SolverParams,
    seed_val: u64,
) -> Result<(Preconditioner, (f64, f64))> {
    let lap = &sparsifier.graph;
    let components = lap.connected_components();
    let precond = if lap.n() <= params.dense_threshold {
        Preconditioner::Dense(oracle::dense_pseudoinverse(&lap.dense_laplacian()))
    } else {
        build_chebyshev_precond(lap, &components, seed_val)?
    };
    let range = certify_sandwich(lap, &components, &precond, params, seed_val)?;
    Ok((precond, range))
}

/// Normalized-Laplacian matvec for a real graph: `(I − D^{-1/2} A D^{-1/2}) v`
/// on the support, zero on isolated vertices.
fn normalized_apply(lap: &RealGraph, inv_sqrt_deg: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = v
        .iter()
        .enumerate()
        .map(|(u, &x)| if inv_sqrt_deg[u] > 0.0 { x } else { 0.0 })
        .collect();
    for &(a, b, w) in lap.edges() {
        let c = w * inv_sqrt_deg[a] * inv_sqrt_deg[b];
        out[a] -= c * v[b];
        out[b] -= c * v[a];
    }
    out
}

fn project_off_kernel(lap: &RealGraph, components: &[Vec<usize>], v: &mut [f64]) {
    // Kernel of the normalized Laplacian: D^{1/2} 1 per component.
    let deg = lap.degrees();
    for comp in components {
        let vol: f64 = comp.iter().map(|&u| deg[u]).sum();
        if vol <= 0.0 {
            continue;
        }
        let proj: f64 = comp.iter().map(|&u| v[u] * deg[u].sqrt()).sum::<f64>() / vol;
        for &u in comp {
            v[u] -= proj * deg[u].sqrt();
        }
    }
}

fn project_component_means(components: &[Vec<usize>], v: &mut [f64]) {
    for comp in components {
        let mean: f64 = comp.iter().map(|&u| v[u]).sum::<f64>() / comp.len() as f64;
        for &u in comp {
            v[u] -= mean;
        }
    }
}

fn chebyshev_apply(
    lap: &RealGraph,
    components: &[Vec<usize>],
    coeffs: &[f64],
    lo: f64,
    hi: f64,
    v: &[f64],
) -> Vec<f64> {
    let deg = lap.degrees();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let n = v.len();
    // Sandwich the polynomial between Euclidean range projections so the
    // operator's range matches Range(L') exactly (outputs sum to zero per
    // component); spectrally this is a no-op on Range(L').
    let mut v_in = v.to_vec();
    project_component_means(components, &mut v_in);
    let mut u: Vec<f64> = (0..n).map(|i| v_in[i] * inv_sqrt[i]).collect();
    project_off_kernel(lap, components, &mut u);

    // Forward Chebyshev recurrence on the shifted operator
    // t(λ) = (2λ − hi − lo) / (hi − lo).
    let center = 0.5 * (hi + lo);
    let half_width = 0.5 * (hi - lo);
    let shifted = |x: &[f64]| -> Vec<f64> {
        let nx = normalized_apply(lap, &inv_sqrt, x);
        (0..n)
            .map(|i| (nx[i] - center * x[i]) / half_width)
            .collect()
    };
    let mut t_prev = u.clone();
    let mut acc: Vec<f64> = u.iter().map(|&x| coeffs[0] * x).collect();
    if coeffs.len() > 1 {
        let mut t_curr = shifted(&u);
        for (k, &c) in coeffs.iter().enumerate().skip(1) {
            for i in 0..n {
                acc[i] += c * t_curr[i];
            }
            if k + 1 < coeffs.len() {
                let next = shifted(&t_curr);
                for i in 0..n {
                    let val = 2.0 * next[i] - t_prev[i];
                    t_prev[i] = t_curr[i];
                    t_curr[i] = val;
                }
            }
        }
    }
    project_off_kernel(lap, components, &mut acc);
    let mut out: Vec<f64> = (0..n).map(|i| acc[i] * inv_sqrt[i]).collect();
    project_component_means(components, &mut out);
    out
}

/// Chebyshev coefficients of `1/λ` on `[lo, hi]` at the given degree.
fn chebyshev_inverse_coeffs(lo: f64, hi: f64, degree: usize) -> Vec<f64> {
    let m = degree + 1;
    let mut coeffs = vec![0.0; m];
    let nodes: Vec<f64> = (0..m)
        .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / m as f64).cos())
        .collect();
    let values: Vec<f64> = nodes
        .iter()
        .map(|&t| 1.0 / (0.5 * (hi - lo) * t + 0.5 * (hi + lo)))
        .collect();
    for (k, c) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &val) in values.iter().enumerate() {
            acc += val * (k as f64 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64).cos();
        }
        *c = 2.0 * acc / m as f64;
    }
    coeffs[0] *= 0.5;
    coeffs
}

fn chebyshev_eval(coeffs: &[f64], lo: f64, hi: f64, lambda: f64) -> f64 {
    let t = (2.0 * lambda - hi - lo) / (hi - lo);
    let mut t_prev = 1.0;
    let mut t_curr = t;
    let mut acc = coeffs[0];
    for &c in coeffs.iter().skip(1) {
        acc += c * t_curr;
        let next = 2.0 * t * t_curr - t_prev;
        t_prev = t_curr;
        t_curr = next;
    }
    acc
}

fn build_chebyshev_precond(
    lap: &RealGraph,
    components: &[Vec<usize>],
    seed_val: u64,
) -> Result<Preconditioner> {
    let deg = lap.degrees();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let n = lap.n();

    // Probe the nonzero eigenvalue range of the normalized Laplacian.
    let mut rng = seed::rng(seed::derive(seed_val, b"precond-probe"));
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    project_off_kernel(lap, components, &mut v);
    let mut lam_max = 1.0f64;
    for _ in 0..200 {
        let mut w = normalized_apply(lap, &inv_sqrt, &v);
        project_off_kernel(lap, components, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            break;
        }
        lam_max = norm
            / v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        for (a, b) in v.iter_mut().zip(&w) {
            *a = b / norm;
        }
    }
    // Smallest nonzero eigenvalue via power iteration on (2.1 I − N).
    let shift = 2.1;
    let mut v2: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    project_off_kernel(lap, components, &mut v2);
    let mut lam_min = lam_max;
    for _ in 0..400 {
        let nv = normalized_apply(lap, &inv_sqrt, &v2);
        let mut w: Vec<f64> = (0..n).map(|i| shift * v2[i] - nv[i]).collect();
        project_off_kernel(lap, components, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            break;
        }
        let top = norm / v2.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        lam_min = shift - top;
        for (a, b) in v2.iter_mut().zip(&w) {
            *a = b / norm;
        }
    }
    let lo = (lam_min * 0.9).max(1e-12);
    let hi = (lam_max * 1.05).min(2.05);

    // Grow the degree until λ p(λ) stays within [2/3, 4/3] on the interval.
    for degree in [4usize, 8, 16, 32, 64, 128, 256, 512] {
        let coeffs = chebyshev_inverse_coeffs(lo, hi, degree);
        let mut worst = 0.0f64;
        for i in 0..=1000 {
            let lam = lo + (hi - lo) * i as f64 / 1000.0;
            let err = (lam * chebyshev_eval(&coeffs, lo, hi, lam) - 1.0).abs();
            worst = worst.max(err);
        }
        if worst <= 1.0 / 3.0 {
            return Ok(Preconditioner::Chebyshev { coeffs, lo, hi });
        }
    }
    Err(Error::Certification(format!(
        "no Chebyshev degree up to 512 reaches the factor-2 sandwich on [{lo:.3e}, {hi:.3e}]"
    )))
}

/// Measure the sandwich factors `x^T L' N L' x / x^T L' x` (the spectrum of
/// `N^{1/2} L' N^{1/2}`) by power iteration toward both ends; all factors
/// must land in [1/2, 2].
fn certify_sandwich(
    lap: &RealGraph,
    components: &[Vec<usize>],
    precond: &Preconditioner,
    params: &SolverParams,
    seed_val: u64,
) -> Result<(f64, f64)> {
    let n = lap.n();
    if lap.m() == 0 {
        return Ok((1.0, 1.0));
    }
    let op = |v: &[f64]| -> Vec<f64> {
        let lv = lap.laplacian_apply(v);
        let nlv = match precond {
            Preconditioner::Dense(nm) => {
                let out = nm * DVector::from_column_slice(&lv);
                out.iter().copied().collect()
            }
            Preconditioner::Chebyshev { coeffs, lo, hi } => {
                chebyshev_apply(lap, components, coeffs, *lo, *hi, &lv)
            }
        };
        nlv
    };
    let l_inner = |a: &[f64], b: &[f64]| -> f64 {
        let lb = lap.laplacian_apply(b);
        a.iter().zip(&lb).map(|(x, y)| x * y).sum()
    };
    let mut rng = seed::rng(seed::derive(seed_val, b"certify"));
    let mut max_factor = f64::MIN;
    let mut min_factor = f64::MAX;
    for _ in 0..params.probes.max(2) {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        // Push toward the top of the spectrum of N L'.
        for _ in 0..60 {
            let w = op(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                break;
            }
            v = w.into_iter().map(|x| x / norm).collect();
        }
        let denom = l_inner(&v, &v);
        if denom > 1e-300 {
            let factor = l_inner(&v, &op(&v)) / denom;
            max_factor = max_factor.max(factor);
            min_factor = min_factor.min(factor);
        }
        // Push toward the bottom with a shifted operator, staying inside
        // the range of L'.
        let shift = 2.2;
        let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        for _ in 0..60 {
            let w = op(&u);
            let mut shifted: Vec<f64> = (0..n).map(|i| shift * u[i] - w[i]).collect();
            project_component_means(components, &mut shifted);
            let norm = shifted.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                break;
            }
            u = shifted.into_iter().map(|x| x / norm).collect();
        }
        let denom = l_inner(&u, &u);
        if denom > 1e-300 {
            let factor = l_inner(&u, &op(&u)) / denom;
            max_factor = max_factor.max(factor);
            min_factor = min_factor.min(factor);
        }
    }
    if !(0.5 - 1e-9..=2.0 + 1e-9).contains(&min_factor)
        || !(0.5 - 1e-9..=2.0 + 1e-9).contains(&max_factor)
    {
        return Err(Error::Certification(format!(
            "preconditioner sandwich outside [1/2, 2]: measured [{min_factor:.6}, {max_factor:.6}]"
        )));
    }
    Ok((min_factor, max_factor))
}

/// Build the solver operator: sparsify at `γ = sqrt(ε)/4`, build and
/// certify `N`, and fix the series length `z` (+ safety margin).
pub fn build_solver_operator(
    g: &WeightedGraph,
    epsilon: f64,
    seed_val: u64,
) -> Result<SolverOperator> {
    build_solver_operator_with_params(g, epsilon, seed_val, &SolverParams::default())
}

pub fn build_solver_operator_with_params(
    g: &WeightedGraph,
    epsilon: f64,
    seed_val: u64,
    params: &SolverParams,
) -> Result<SolverOperator> {
    if !(epsilon > 0.0 && epsilon <= 1.0 / 16.0) {
        return Err(Error::Precondition(format!(
            "solver tolerance must lie in (0, 1/16], got {epsilon}"
        )));
    }
    let gamma = epsilon.sqrt() / 4.0;
    let sparsifier = sparsify_with_params(g, gamma, seed::derive(seed_val, b"sparsify"), params)?;
    let (precond, certified_range) =
        build_preconditioner(&sparsifier, params, seed::derive(seed_val, b"precond"))?;
    let z = solver_z_formula(epsilon) + params.z_margin;
    Ok(SolverOperator {
        components: g.connected_components(),
        sparsifier,
        precond,
        z,
        epsilon,
        certified_range,
    })
}
