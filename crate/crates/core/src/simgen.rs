//! Synthetic model families `(Γ, Ω)` and dataset sampling `Y = X·Γᵀ + Z`,
//! with `X` rows i.i.d. `N(0, I)` and `Z` rows i.i.d. `N(0, Ω⁻¹)`.
//!
//! Off-diagonal precision entries are drawn on the upper triangle and
//! mirrored. Families with a prescribed diagonal are redrawn until the
//! Cholesky certificate succeeds; the homogeneous family instead shifts its
//! diagonal by the most negative eigenvalue of the off-diagonal part.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::adjust::Dataset;
use crate::edge::EdgePair;
use crate::error::{AntacError, Result};
use crate::inference::SupportMask;
use crate::numerics::{cholesky, mvn_sample_with, standard_normal_matrix, CholeskyFactor, Matrix};

pub const MAX_PD_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Diagonal `diag_value`; off-diagonals 0.3, 0.6 or 1, each with probability π/3.
    TableOne,
    /// Off-diagonals `N(0,1)·Bernoulli(π)`, diagonal shifted to make Ω positive definite.
    Homogeneous,
    /// 50×50 base block scaled by 1, 5 and 10 along the diagonal (p = 150).
    MagnifiedBlock,
    /// 200×200 with the bottom-right quarter replaced by twice the top-left (p = 200).
    HeteroProduct,
    /// Off-diagonals in {0.4, 0.5} with probability π and diagonal `diag_value`, any p.
    Custom,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::TableOne => "table_one",
            Family::Homogeneous => "homogeneous",
            Family::MagnifiedBlock => "magnified_block",
            Family::HeteroProduct => "hetero_product",
            Family::Custom => "custom",
        }
    }

    pub fn parse(name: &str) -> Result<Family> {
        match name {
            "table_one" | "table1" => Ok(Family::TableOne),
            "homogeneous" => Ok(Family::Homogeneous),
            "magnified_block" => Ok(Family::MagnifiedBlock),
            "hetero_product" | "heterogeneous_product" => Ok(Family::HeteroProduct),
            "custom" => Ok(Family::Custom),
            other => Err(AntacError::InvalidInput(format!(
                "unknown model family '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: Family,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub gamma_prob: f64,
    /// π = P(ωᵢⱼ ≠ 0).
    pub omega_prob: f64,
    /// Diagonal of Ω for `TableOne` and `Custom`.
    pub diag_value: f64,
    pub seed: u64,
}

impl ModelSpec {
    pub fn table_one(p: usize, q: usize, n: usize, pi: f64, diag_value: f64, seed: u64) -> Self {
        ModelSpec {
            family: Family::TableOne,
            p,
            q,
            n,
            gamma_prob: 0.025,
            omega_prob: pi,
            diag_value,
            seed,
        }
    }

    pub fn homogeneous(p: usize, q: usize, n: usize, pi: f64, seed: u64) -> Self {
        ModelSpec {
            family: Family::Homogeneous,
            p,
            q,
            n,
            gamma_prob: 0.025,
            omega_prob: pi,
            diag_value: 1.0,
            seed,
        }
    }

    pub fn magnified_block(n: usize, seed: u64) -> Self {
        ModelSpec {
            family: Family::MagnifiedBlock,
            p: 150,
            q: 100,
            n,
            gamma_prob: 0.05,
            omega_prob: 0.02,
            diag_value: 1.0,
            seed,
        }
    }

    pub fn hetero_product(n: usize, seed: u64) -> Self {
        ModelSpec {
            family: Family::HeteroProduct,
            p: 200,
            q: 100,
            n,
            gamma_prob: 0.05,
            omega_prob: 0.005,
            diag_value: 1.0,
            seed,
        }
    }

    pub fn custom(p: usize, q: usize, n: usize, pi: f64, diag_value: f64, seed: u64) -> Self {
        ModelSpec {
            family: Family::Custom,
            p,
            q,
            n,
            gamma_prob: 0.025,
            omega_prob: pi,
            diag_value,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_prob", self.gamma_prob),
            ("omega_prob", self.omega_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(AntacError::InvalidInput(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if self.p < 2 || self.n < 2 {
            return Err(AntacError::InvalidInput(format!(
                "need p >= 2 and n >= 2 (got p={}, n={})",
                self.p, self.n
            )));
        }
        let fixed = match self.family {
            Family::MagnifiedBlock => Some(150),
            Family::HeteroProduct => Some(200),
            _ => None,
        };
        if let Some(p) = fixed {
            if self.p != p {
                return Err(AntacError::InvalidInput(format!(
                    "family {} has fixed p = {p}, got {}",
                    self.family.name(),
                    self.p
                )));
            }
        }
        if matches!(self.family, Family::TableOne | Family::Custom) && !(self.diag_value > 0.0) {
            return Err(AntacError::InvalidInput(format!(
                "diag_value must be positive, got {}",
                self.diag_value
            )));
        }
        Ok(())
    }
}

/// A certified model: Ω passed Cholesky, and `support` is its exact
/// off-diagonal nonzero pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub gamma: Matrix,
    pub omega: Matrix,
    pub support: SupportMask,
    factor: CholeskyFactor,
}

impl GroundTruth {
    pub fn new(gamma: Matrix, omega: Matrix) -> Result<Self> {
        if gamma.rows() != omega.rows() {
            return Err(AntacError::DimensionMismatch(format!(
                "Γ has {} rows but Ω is {}x{}",
                gamma.rows(),
                omega.rows(),
                omega.cols()
            )));
        }
        let factor = cholesky(&omega)?;
        let support = SupportMask::from_matrix(&omega);
        Ok(GroundTruth {
            gamma,
            omega,
            support,
            factor,
        })
    }

    pub fn p(&self) -> usize {
        self.omega.rows()
    }

    pub fn q(&self) -> usize {
        self.gamma.cols()
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn covariance(&self) -> Matrix {
        self.factor.inverse()
    }
}

pub fn gen_gamma<R: Rng + ?Sized>(p: usize, q: usize, prob: f64, rng: &mut R) -> Matrix {
    let mut g = Matrix::zeros(p, q);
    for i in 0..p {
        for j in 0..q {
            let keep = rng.random::<f64>() < prob;
            let value: f64 = rng.sample(StandardNormal);
            if keep {
                g[(i, j)] = value;
            }
        }
    }
    g
}

/// Symmetric matrix with `diag` on the diagonal and upper-triangle draws from `draw`.
fn symmetric_from<R: Rng + ?Sized>(
    p: usize,
    diag: f64,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> f64,
) -> Matrix {
    let mut m = Matrix::zeros(p, p);
    for i in 0..p {
        m[(i, i)] = diag;
        for j in i + 1..p {
            let v = draw(rng);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn retry_until_pd<R: Rng + ?Sized>(
    rng: &mut R,
    mut build: impl FnMut(&mut R) -> Matrix,
) -> Result<Matrix> {
    let mut last = None;
    for _ in 0..MAX_PD_ATTEMPTS {
        let m = build(rng);
        match cholesky(&m) {
            Ok(_) => return Ok(m),
            Err(e) => last = Some(e),
        }
    }
    Err(AntacError::GenerationFailed {
        attempts: MAX_PD_ATTEMPTS,
        reason: last.map_or_else(String::new, |e| e.to_string()),
    })
}

fn two_point<R: Rng + ?Sized>(rng: &mut R, prob: f64) -> f64 {
    let u: f64 = rng.random();
    let pick: bool = rng.random();
    if u < prob {
        if pick {
            0.5
        } else {
            0.4
        }
    } else {
        0.0
    }
}

pub fn gen_omega_table1<R: Rng + ?Sized>(
    p: usize,
    pi: f64,
    diag_value: f64,
    rng: &mut R,
) -> Result<Matrix> {
    retry_until_pd(rng, |rng| {
        symmetric_from(p, diag_value, rng, |rng| {
            let u: f64 = rng.random();
            if u < pi / 3.0 {
                0.3
            } else if u < 2.0 * pi / 3.0 {
                0.6
            } else if u < pi {
                1.0
            } else {
                0.0
            }
        })
    })
}

pub fn gen_omega_homogeneous<R: Rng + ?Sized>(p: usize, pi: f64, rng: &mut R) -> Matrix {
    let mut m = symmetric_from(p, 0.0, rng, |rng| {
        let keep = rng.random::<f64>() < pi;
        let value: f64 = rng.sample(StandardNormal);
        if keep {
            value
        } else {
            0.0
        }
    });
    let min_eig = min_eigenvalue(&m);
    let diag = 1.0 + (-min_eig).max(0.0);
    for i in 0..p {
        m[(i, i)] = diag;
    }
    m
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.rows() == 0 {
        return 0.0;
    }
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    SymmetricEigen::new(dm)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn gen_magnified_block<R: Rng + ?Sized>(rng: &mut R) -> Result<Matrix> {
    let base = retry_until_pd(rng, |rng| {
        symmetric_from(50, 1.0, rng, |rng| two_point(rng, 0.02))
    })?;
    let mut m = Matrix::zeros(150, 150);
    for (b, scale) in [1.0, 5.0, 10.0].into_iter().enumerate() {
        for i in 0..50 {
            for j in 0..50 {
                m[(50 * b + i, 50 * b + j)] = scale * base[(i, j)];
            }
        }
    }
    Ok(m)
}

pub fn gen_hetero_product<R: Rng + ?Sized>(rng: &mut R) -> Result<Matrix> {
    retry_until_pd(rng, |rng| {
        let mut m = symmetric_from(200, 1.0, rng, |rng| two_point(rng, 0.005));
        for i in 0..100 {
            for j in 0..100 {
                m[(100 + i, 100 + j)] = 2.0 * m[(i, j)];
            }
        }
        m
    })
}

pub fn gen_omega_custom<R: Rng + ?Sized>(
    p: usize,
    pi: f64,
    diag_value: f64,
    rng: &mut R,
) -> Result<Matrix> {
    retry_until_pd(rng, |rng| {
        symmetric_from(p, diag_value, rng, |rng| two_point(rng, pi))
    })
}

/// Draw `(Γ, Ω)` for a spec: Ω first, then Γ, from one stream.
pub fn generate_truth<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<GroundTruth> {
    spec.validate()?;
    let omega = match spec.family {
        Family::TableOne => gen_omega_table1(spec.p, spec.omega_prob, spec.diag_value, rng)?,
        Family::Homogeneous => gen_omega_homogeneous(spec.p, spec.omega_prob, rng),
        Family::MagnifiedBlock => gen_magnified_block(rng)?,
        Family::HeteroProduct => gen_hetero_product(rng)?,
        Family::Custom => gen_omega_custom(spec.p, spec.omega_prob, spec.diag_value, rng)?,
    };
    let gamma = gen_gamma(spec.p, spec.q, spec.gamma_prob, rng);
    GroundTruth::new(gamma, omega).map_err(|e| AntacError::GenerationFailed {
        attempts: 1,
        reason: e.to_string(),
    })
}

/// A dataset together with the noise matrix `Z` it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub dataset: Dataset,
    pub z: Matrix,
}

pub fn simulate_dataset<R: Rng + ?Sized>(
    truth: &GroundTruth,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    Ok(simulate_with_noise(truth, n, rng)?.dataset)
}

pub fn simulate_with_noise<R: Rng + ?Sized>(
    truth: &GroundTruth,
    n: usize,
    rng: &mut R,
) -> Result<SimulatedData> {
    if n < 2 {
        return Err(AntacError::InvalidInput(format!("need n >= 2, got {n}")));
    }
    let x = standard_normal_matrix(n, truth.q(), rng);
    let z = mvn_sample_with(truth.factor(), n, rng);
    let y = x.matmul(&truth.gamma.transpose())?.add(&z)?;
    Ok(SimulatedData {
        dataset: Dataset::new(x, y)?,
        z,
    })
}

/// Off-diagonal pairs whose true value equals `value` exactly.
pub fn pairs_with_value(omega: &Matrix, value: f64) -> Vec<EdgePair> {
    EdgePair::all(omega.rows())
        .into_iter()
        .filter(|e| omega[(e.i, e.j)] == value)
        .collect()
}
