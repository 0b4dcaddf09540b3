//! Step 2: per-pair precision estimation on the adjusted residuals.
//!
//! For a pair `A = {i, j}` both `Ẑᵢ` and `Ẑⱼ` are regressed on the remaining
//! columns `Ẑ_{Aᶜ}` with the scaled lasso. The residual cross-product
//! `Ψ̂ = ε̂ᵀε̂/n` is inverted to give the 2×2 block `Ω̂_{A,A}`, whose
//! off-diagonal entry is asymptotically normal with variance
//! `(ωᵢᵢωⱼⱼ + ωᵢⱼ²)/n`.

use std::collections::BTreeSet;

use crate::adjust::t_to_lambda;
use crate::error::{AntacError, Result};
use crate::numerics::{dot, par_map, std_normal_cdf, student_t_quantile, Matrix};
use crate::scaled_lasso::{solve_scaled_lasso_columns, SolverOptions};

/// `det(Ψ̂)` at or below this is treated as singular.
pub const SINGULAR_PSI_DET: f64 = 1e-14;

pub type Block2 = [[f64; 2]; 2];

/// An unordered node pair, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgePair {
    pub i: usize,
    pub j: usize,
}

impl EdgePair {
    /// Orders the endpoints; rejects self-loops and indices `>= p`.
    pub fn new(a: usize, b: usize, p: usize) -> Result<Self> {
        if a == b {
            return Err(AntacError::InvalidInput(format!(
                "pair ({a}, {b}) is a self-loop"
            )));
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        if j >= p {
            return Err(AntacError::InvalidInput(format!(
                "pair ({a}, {b}) out of range for p = {p}"
            )));
        }
        Ok(EdgePair { i, j })
    }

    pub fn contains(&self, k: usize) -> bool {
        self.i == k || self.j == k
    }

    /// All pairs of `0..p` in lexicographic order.
    pub fn all(p: usize) -> Vec<EdgePair> {
        (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| EdgePair { i, j }))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lambda2Mode {
    /// `√(2 log p / n)`.
    Asymptotic,
    /// `B = q_t(1 − s/(2p), n−1)`.
    Estimation,
    /// `B = q_t(1 − (s/p)³/2, n−1)`.
    SupportRecovery,
}

pub fn default_s_max2(n: usize, p: usize) -> f64 {
    (n as f64).sqrt() / (p as f64).ln()
}

pub fn lambda2(n: usize, p: usize, s_max2: f64, mode: Lambda2Mode) -> Result<f64> {
    if n < 3 || p < 3 {
        return Err(AntacError::Domain(format!(
            "lambda2 needs n >= 3 and p >= 3 (got n={n}, p={p})"
        )));
    }
    let tail = match mode {
        Lambda2Mode::Asymptotic => {
            return Ok((2.0 * (p as f64).ln() / n as f64).sqrt());
        }
        Lambda2Mode::Estimation => s_max2 / (2.0 * p as f64),
        Lambda2Mode::SupportRecovery => 0.5 * (s_max2 / p as f64).powi(3),
    };
    if !(s_max2 > 0.0) {
        return Err(AntacError::Domain(format!(
            "s_max2 must be positive, got {s_max2}"
        )));
    }
    if tail >= 0.5 {
        return Err(AntacError::Domain(format!(
            "finite-sample lambda2 needs a tail probability below 1/2, got {tail} (s_max2 = {s_max2}, p = {p})"
        )));
    }
    let b = student_t_quantile(1.0 - tail, n as f64 - 1.0)?;
    Ok(t_to_lambda(b, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEstimate {
    pub pair: EdgePair,
    /// `Ψ̂_{A,A} = ε̂ᵀε̂/n`.
    pub psi_hat: Block2,
    /// `Ω̂_{A,A} = Ψ̂⁻¹`.
    pub omega_hat: Block2,
    pub omega_ij: f64,
    pub omega_ii: f64,
    pub omega_jj: f64,
    /// `ω̂ᵢᵢω̂ⱼⱼ + ω̂ᵢⱼ²`, the inverse Fisher information.
    pub fisher_var_inv: f64,
    pub z_score: f64,
    pub p_value: f64,
    pub partial_corr: f64,
    /// Nonzero rows of `β̂` as `(node, [coef for i, coef for j])`.
    pub beta_hat: Vec<(usize, [f64; 2])>,
    /// Scaled-lasso noise levels of the two regressions.
    pub noise_levels: [f64; 2],
    pub lambda2: f64,
    pub converged: bool,
}

impl EdgeEstimate {
    /// `√(fisher_var_inv / n)`.
    pub fn standard_error(&self, n: usize) -> f64 {
        (self.fisher_var_inv / n as f64).sqrt()
    }

    /// Dense `(p−2)×2` coefficient matrix with rows ordered by node index over `Aᶜ`.
    pub fn beta_dense(&self, p: usize) -> Matrix {
        let complement: Vec<usize> = (0..p).filter(|&k| !self.pair.contains(k)).collect();
        let mut m = Matrix::zeros(complement.len(), 2);
        for &(node, coef) in &self.beta_hat {
            if let Ok(row) = complement.binary_search(&node) {
                m[(row, 0)] = coef[0];
                m[(row, 1)] = coef[1];
            }
        }
        m
    }
}

pub fn fisher_variance(omega_hat: &Block2) -> f64 {
    omega_hat[0][0] * omega_hat[1][1] + omega_hat[0][1] * omega_hat[0][1]
}

/// Two-sided test of `ωᵢⱼ = 0`: returns `(z, p)`.
pub fn edge_pvalue(omega_ij: f64, fisher_var_inv: f64, n: usize) -> (f64, f64) {
    let z = omega_ij * (n as f64 / fisher_var_inv).sqrt();
    let p = (2.0 * std_normal_cdf(-z.abs())).min(1.0);
    (z, p)
}

pub fn partial_correlation(omega_hat: &Block2) -> f64 {
    -omega_hat[0][1] / (omega_hat[0][0] * omega_hat[1][1]).sqrt()
}

fn invert_block(psi: &Block2, pair: EdgePair) -> Result<Block2> {
    let det = psi[0][0] * psi[1][1] - psi[0][1] * psi[1][0];
    if !(det > SINGULAR_PSI_DET) {
        return Err(AntacError::SingularPsi {
            i: pair.i,
            j: pair.j,
            det,
        });
    }
    let off = -psi[0][1] / det;
    Ok([[psi[1][1] / det, off], [off, psi[0][0] / det]])
}

fn cross_product(a: &[f64], b: &[f64]) -> Block2 {
    let n = a.len() as f64;
    let ab = dot(a, b) / n;
    [[dot(a, a) / n, ab], [ab, dot(b, b) / n]]
}

/// Assemble inference quantities from a residual pair.
fn finish_edge(
    pair: EdgePair,
    eps_i: &[f64],
    eps_j: &[f64],
) -> Result<(Block2, Block2, f64, f64, f64, f64)> {
    let n = eps_i.len();
    let psi_hat = cross_product(eps_i, eps_j);
    let omega_hat = invert_block(&psi_hat, pair)?;
    let fisher = fisher_variance(&omega_hat);
    let (z, pv) = edge_pvalue(omega_hat[0][1], fisher, n);
    let r = partial_correlation(&omega_hat);
    Ok((psi_hat, omega_hat, fisher, z, pv, r))
}

fn estimate_edge_columns(
    columns: &[Vec<f64>],
    pair: EdgePair,
    lambda2: f64,
    excluded: &[bool],
    solver: &SolverOptions,
) -> Result<EdgeEstimate> {
    let n = columns[pair.i].len();
    if n <= 2 {
        return Err(AntacError::InvalidInput(format!(
            "edge estimation needs n > 2, got {n}"
        )));
    }
    let complement: Vec<usize> = (0..columns.len())
        .filter(|&k| !pair.contains(k) && !excluded[k])
        .collect();
    let design: Vec<&[f64]> = complement.iter().map(|&k| columns[k].as_slice()).collect();

    let mut residuals: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut coefs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut noise_levels = [0.0; 2];
    let mut converged = true;
    for (slot, &m) in [pair.i, pair.j].iter().enumerate() {
        let fit = solve_scaled_lasso_columns(&columns[m], &design, lambda2, solver)?;
        converged &= fit.converged;
        let mut eps = columns[m].clone();
        for (&b, col) in fit.coefficients.iter().zip(&design) {
            if b != 0.0 {
                for (e, &z) in eps.iter_mut().zip(col.iter()) {
                    *e -= b * z;
                }
            }
        }
        residuals[slot] = eps;
        noise_levels[slot] = fit.noise_level;
        coefs[slot] = fit.coefficients;
    }

    let beta_hat = complement
        .iter()
        .enumerate()
        .filter(|(r, _)| coefs[0][*r] != 0.0 || coefs[1][*r] != 0.0)
        .map(|(r, &node)| (node, [coefs[0][r], coefs[1][r]]))
        .collect();

    let (psi_hat, omega_hat, fisher_var_inv, z_score, p_value, partial_corr) =
        finish_edge(pair, &residuals[0], &residuals[1])?;
    Ok(EdgeEstimate {
        pair,
        psi_hat,
        omega_hat,
        omega_ij: omega_hat[0][1],
        omega_ii: omega_hat[0][0],
        omega_jj: omega_hat[1][1],
        fisher_var_inv,
        z_score,
        p_value,
        partial_corr,
        beta_hat,
        noise_levels,
        lambda2,
        converged,
    })
}

pub fn estimate_edge(z_hat: &Matrix, pair: EdgePair, lambda2: f64) -> Result<EdgeEstimate> {
    if pair.j >= z_hat.cols() || pair.i >= pair.j {
        return Err(AntacError::InvalidInput(format!(
            "pair ({}, {}) invalid for p = {}",
            pair.i,
            pair.j,
            z_hat.cols()
        )));
    }
    let columns = z_hat.columns();
    let excluded = vec![false; columns.len()];
    estimate_edge_columns(
        &columns,
        pair,
        lambda2,
        &excluded,
        &SolverOptions::default(),
    )
}

/// The oracle block `Ω^{ora}_{A,A}`: the same 2×2 inversion as the plug-in
/// estimator, but with residuals built from the true coefficients
/// `β = −Ω_{Aᶜ,A}·Ω_{A,A}⁻¹` on the noise `Z` itself.
pub fn oracle_omega(z: &Matrix, omega: &Matrix, pair: EdgePair) -> Result<Block2> {
    let p = omega.rows();
    if z.cols() != p || !omega.is_square() {
        return Err(AntacError::DimensionMismatch(
            "oracle needs Z (n×p) and Ω (p×p)".into(),
        ));
    }
    let (i, j) = (pair.i, pair.j);
    let block = [
        [omega[(i, i)], omega[(i, j)]],
        [omega[(j, i)], omega[(j, j)]],
    ];
    let block_inv = invert_block(&block, pair)?;
    let columns = z.columns();
    let mut eps = [columns[i].clone(), columns[j].clone()];
    for k in (0..p).filter(|&k| !pair.contains(k)) {
        let (oki, okj) = (omega[(k, i)], omega[(k, j)]);
        if oki == 0.0 && okj == 0.0 {
            continue;
        }
        for (slot, e) in eps.iter_mut().enumerate() {
            let beta = -(oki * block_inv[0][slot] + okj * block_inv[1][slot]);
            for (v, &zk) in e.iter_mut().zip(&columns[k]) {
                *v -= beta * zk;
            }
        }
    }
    invert_block(&cross_product(&eps[0], &eps[1]), pair)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSelection {
    All,
    List(Vec<EdgePair>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphOptions {
    pub lambda2: f64,
    pub parallelism: usize,
    /// Columns dropped from every regression; pairs touching them are skipped.
    pub excluded: Vec<usize>,
    pub solver: SolverOptions,
}

impl GraphOptions {
    pub fn new(lambda2: f64, parallelism: usize) -> Self {
        GraphOptions {
            lambda2,
            parallelism,
            excluded: Vec::new(),
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalSource {
    /// Mean of the pair-level `ω̂ᵢᵢ` over all estimated pairs containing `i`.
    PairAverage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    pub p: usize,
    pub n: usize,
    /// Successful estimates in lexicographic pair order.
    pub edges: Vec<EdgeEstimate>,
    /// Symmetric p×p matrix; entries of unestimated pairs are zero.
    pub assembled: Matrix,
    pub diagonal_source: DiagonalSource,
    pub lambda2: f64,
    pub failures: Vec<(EdgePair, AntacError)>,
    /// Requested pairs touching an excluded column.
    pub skipped: Vec<EdgePair>,
}

impl PrecisionEstimate {
    pub fn edge(&self, pair: EdgePair) -> Option<&EdgeEstimate> {
        self.edges
            .binary_search_by(|e| e.pair.cmp(&pair))
            .ok()
            .map(|k| &self.edges[k])
    }

    pub fn requested(&self) -> usize {
        self.edges.len() + self.failures.len() + self.skipped.len()
    }
}

/// Pair-averaged diagonal plus the estimated off-diagonals.
pub fn assemble(p: usize, edges: &[EdgeEstimate]) -> Matrix {
    let mut m = Matrix::zeros(p, p);
    let mut diag_sum = vec![0.0; p];
    let mut diag_count = vec![0usize; p];
    for e in edges {
        let EdgePair { i, j } = e.pair;
        m[(i, j)] = e.omega_ij;
        m[(j, i)] = e.omega_ij;
        diag_sum[i] += e.omega_ii;
        diag_sum[j] += e.omega_jj;
        diag_count[i] += 1;
        diag_count[j] += 1;
    }
    for k in 0..p {
        if diag_count[k] > 0 {
            m[(k, k)] = diag_sum[k] / diag_count[k] as f64;
        }
    }
    m
}

pub fn estimate_graph(
    z_hat: &Matrix,
    pairs: &PairSelection,
    lambda2: f64,
    parallelism: usize,
) -> Result<PrecisionEstimate> {
    estimate_graph_with(z_hat, pairs, &GraphOptions::new(lambda2, parallelism))
}

pub fn estimate_graph_with(
    z_hat: &Matrix,
    pairs: &PairSelection,
    options: &GraphOptions,
) -> Result<PrecisionEstimate> {
    let (n, p) = z_hat.shape();
    if p < 2 {
        return Err(AntacError::InvalidInput(format!("need p >= 2, got {p}")));
    }
    if !(options.lambda2 > 0.0) || !options.lambda2.is_finite() {
        return Err(AntacError::InvalidInput(format!(
            "lambda2 must be positive, got {}",
            options.lambda2
        )));
    }
    let requested = match pairs {
        PairSelection::All => EdgePair::all(p),
        PairSelection::List(list) => {
            let mut seen = BTreeSet::new();
            for pair in list {
                if pair.i >= pair.j || pair.j >= p {
                    return Err(AntacError::InvalidInput(format!(
                        "pair ({}, {}) invalid for p = {p}",
                        pair.i, pair.j
                    )));
                }
                if !seen.insert(*pair) {
                    return Err(AntacError::InvalidInput(format!(
                        "duplicate pair ({}, {})",
                        pair.i, pair.j
                    )));
                }
            }
            seen.into_iter().collect()
        }
    };
    let mut excluded = vec![false; p];
    for &k in &options.excluded {
        if k >= p {
            return Err(AntacError::InvalidInput(format!(
                "excluded column {k} >= p"
            )));
        }
        excluded[k] = true;
    }
    let (work, skipped): (Vec<EdgePair>, Vec<EdgePair>) = requested
        .into_iter()
        .partition(|e| !excluded[e.i] && !excluded[e.j]);

    let columns = z_hat.columns();
    let outcomes = par_map(&work, options.parallelism, |&pair| {
        estimate_edge_columns(&columns, pair, options.lambda2, &excluded, &options.solver)
    });

    let mut edges = Vec::with_capacity(work.len());
    let mut failures = Vec::new();
    for (pair, outcome) in work.into_iter().zip(outcomes) {
        match outcome {
            Ok(e) => edges.push(e),
            Err(e) => failures.push((pair, e)),
        }
    }
    let assembled = assemble(p, &edges);
    Ok(PrecisionEstimate {
        p,
        n,
        edges,
        assembled,
        diagonal_source: DiagonalSource::PairAverage,
        lambda2: options.lambda2,
        failures,
        skipped,
    })
}
