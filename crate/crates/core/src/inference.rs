//! Graph-level decisions on top of per-edge estimates.

use std::collections::BTreeMap;

use crate::edge::{assemble, EdgeEstimate, EdgePair};
use crate::error::{AntacError, Result};
use crate::numerics::Matrix;

/// Selected unordered pairs with the sign of each selected entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportMask {
    p: usize,
    signs: BTreeMap<EdgePair, i8>,
}

impl SupportMask {
    pub fn new(p: usize) -> Self {
        SupportMask {
            p,
            signs: BTreeMap::new(),
        }
    }

    /// Nonzero off-diagonal pattern of a symmetric matrix (exact zeros only).
    pub fn from_matrix(m: &Matrix) -> Self {
        let p = m.rows();
        let mut mask = SupportMask::new(p);
        for pair in EdgePair::all(p) {
            let v = m[(pair.i, pair.j)];
            if v != 0.0 {
                mask.signs.insert(pair, if v > 0.0 { 1 } else { -1 });
            }
        }
        mask
    }

    pub fn insert(&mut self, pair: EdgePair, sign: i8) -> Result<()> {
        if pair.j >= self.p || pair.i >= pair.j {
            return Err(AntacError::InvalidInput(format!(
                "pair ({}, {}) invalid for p = {}",
                pair.i, pair.j, self.p
            )));
        }
        if sign != 1 && sign != -1 {
            return Err(AntacError::InvalidInput(format!(
                "sign must be ±1, got {sign}"
            )));
        }
        self.signs.insert(pair, sign);
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn contains(&self, pair: &EdgePair) -> bool {
        self.signs.contains_key(pair)
    }

    pub fn sign(&self, pair: &EdgePair) -> Option<i8> {
        self.signs.get(pair).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgePair, i8)> + '_ {
        self.signs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn pairs(&self) -> impl Iterator<Item = EdgePair> + '_ {
        self.signs.keys().copied()
    }

    /// Symmetric sign matrix with zero diagonal.
    pub fn to_sign_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.p, self.p);
        for (pair, s) in self.iter() {
            m[(pair.i, pair.j)] = s as f64;
            m[(pair.j, pair.i)] = s as f64;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdedPrecision {
    pub matrix: Matrix,
    pub xi0: f64,
    pub capped: bool,
}

impl ThresholdedPrecision {
    /// The theory asks for `ξ₀ > 2`; smaller values are allowed for sweeps.
    pub fn within_theory(&self) -> bool {
        self.xi0 > 2.0
    }
}

/// `τᵢⱼ = √(2ξ₀(ω̂ᵢᵢω̂ⱼⱼ + ω̂ᵢⱼ²) log p / n)` from the pair-local diagonals.
pub fn threshold_level(edge: &EdgeEstimate, n: usize, p: usize, xi0: f64) -> f64 {
    (2.0 * xi0 * edge.fisher_var_inv * (p as f64).ln() / n as f64).sqrt()
}

pub fn antac_threshold(
    edges: &[EdgeEstimate],
    n: usize,
    p: usize,
    xi0: f64,
) -> (SupportMask, ThresholdedPrecision) {
    let mut mask = SupportMask::new(p);
    let mut matrix = assemble(p, edges);
    for e in edges {
        let tau = threshold_level(e, n, p, xi0);
        if e.omega_ij.abs() >= tau && e.omega_ij != 0.0 {
            mask.signs
                .insert(e.pair, if e.omega_ij > 0.0 { 1 } else { -1 });
        } else {
            matrix[(e.pair.i, e.pair.j)] = 0.0;
            matrix[(e.pair.j, e.pair.i)] = 0.0;
        }
    }
    (
        mask,
        ThresholdedPrecision {
            matrix,
            xi0,
            capped: false,
        },
    )
}

/// Zero every off-diagonal entry whose magnitude exceeds `log p`.
pub fn cap_estimator(thresholded: &ThresholdedPrecision, p: usize) -> ThresholdedPrecision {
    let cap = (p as f64).ln();
    let mut matrix = thresholded.matrix.clone();
    let dim = matrix.rows();
    for i in 0..dim {
        for j in 0..dim {
            if i != j && matrix[(i, j)].abs() > cap {
                matrix[(i, j)] = 0.0;
            }
        }
    }
    ThresholdedPrecision {
        matrix,
        xi0: thresholded.xi0,
        capped: true,
    }
}

/// Benjamini–Hochberg step-up adjusted p-values, returned in input order.
pub fn fdr_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(AntacError::Domain(format!("p-value {bad} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut q = vec![0.0; m];
    let mut running = 1.0_f64;
    for (rank, &idx) in order.iter().enumerate().rev() {
        let adjusted = p_values[idx] * m as f64 / (rank + 1) as f64;
        running = running.min(adjusted);
        q[idx] = running;
    }
    Ok(q)
}

/// Edges whose q-value is at most `alpha`.
pub fn fdr_select(edges: &[EdgeEstimate], q_values: &[f64], p: usize, alpha: f64) -> SupportMask {
    let mut mask = SupportMask::new(p);
    for (e, &q) in edges.iter().zip(q_values) {
        if q <= alpha && e.omega_ij != 0.0 {
            mask.signs
                .insert(e.pair, if e.omega_ij > 0.0 { 1 } else { -1 });
        }
    }
    mask
}
