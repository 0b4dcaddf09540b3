//! Step 1: regress every response column on the covariates with the scaled
//! lasso and keep the residuals `Ẑ = Y − X·Γ̂ᵀ`.

use crate::error::{AntacError, Result};
use crate::numerics::{norm2, par_map, student_t_quantile, Matrix};
use crate::scaled_lasso::{solve_scaled_lasso_columns, theta_floor, ScaledLassoFit, SolverOptions};

/// Row-aligned covariates `x` (n×q) and responses `y` (n×p).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Matrix,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(AntacError::DimensionMismatch(format!(
                "X has {} rows but Y has {}",
                x.rows(),
                y.rows()
            )));
        }
        if y.rows() < 2 {
            return Err(AntacError::InvalidInput(format!(
                "need at least 2 samples, got {}",
                y.rows()
            )));
        }
        Ok(Dataset { x, y })
    }

    /// A dataset with no covariates.
    pub fn responses_only(y: Matrix) -> Result<Self> {
        let n = y.rows();
        Dataset::new(Matrix::zeros(n, 0), y)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.rows()
    }

    pub fn p(&self) -> usize {
        self.y.cols()
    }

    pub fn q(&self) -> usize {
        self.x.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lambda1Mode {
    /// `√(2(1 + log p/log q)/n)`.
    Asymptotic,
    /// `B/√(n−1+B²)` with `B = q_t(1 − ½(s/q)^{1+log p/log q}, n−1)`.
    FiniteSample,
}

/// Default sparsity guess `√n / log q` for the covariate regressions.
pub fn default_s_max1(n: usize, q: usize) -> f64 {
    (n as f64).sqrt() / (q as f64).ln()
}

/// Map a t quantile `B` with `n−1` degrees of freedom onto the correlation scale.
pub(crate) fn t_to_lambda(b: f64, n: usize) -> f64 {
    b / ((n as f64 - 1.0) + b * b).sqrt()
}

pub fn lambda1(n: usize, p: usize, q: usize, s_max1: f64, mode: Lambda1Mode) -> Result<f64> {
    if n < 3 || p < 2 || q < 2 {
        return Err(AntacError::Domain(format!(
            "lambda1 needs n >= 3, p >= 2, q >= 2 (got n={n}, p={p}, q={q})"
        )));
    }
    let exponent = 1.0 + (p as f64).ln() / (q as f64).ln();
    match mode {
        Lambda1Mode::Asymptotic => Ok((2.0 * exponent / n as f64).sqrt()),
        Lambda1Mode::FiniteSample => {
            if !(s_max1 > 0.0) {
                return Err(AntacError::Domain(format!(
                    "s_max1 must be positive, got {s_max1}"
                )));
            }
            let tail = 0.5 * (s_max1 / q as f64).powf(exponent);
            if tail >= 0.5 {
                return Err(AntacError::Domain(format!(
                    "finite-sample lambda1 needs a tail probability below 1/2, got {tail} (s_max1 = {s_max1}, q = {q})"
                )));
            }
            let b = student_t_quantile(1.0 - tail, n as f64 - 1.0)?;
            Ok(t_to_lambda(b, n))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdjustOptions {
    /// Subtract column means of X and Y before regressing. Off by default:
    /// the model assumes zero-mean covariates.
    pub center: bool,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentResult {
    /// Γ̂, p×q.
    pub gamma_hat: Matrix,
    /// Ẑ, n×p.
    pub z_hat: Matrix,
    /// Per-column noise estimate `σ̂ⱼⱼ^{1/2}`.
    pub sigma_hat: Vec<f64>,
    pub lambda1: f64,
    pub centered: bool,
    /// Columns whose regression failed or did not converge, with the cause.
    pub failures: Vec<(usize, AntacError)>,
    pub fits: Vec<Option<ScaledLassoFit>>,
}

impl AdjustmentResult {
    pub fn failed_columns(&self) -> Vec<usize> {
        self.failures.iter().map(|(j, _)| *j).collect()
    }
}

pub fn adjust(dataset: &Dataset, lambda1: f64, parallelism: usize) -> Result<AdjustmentResult> {
    adjust_with(dataset, lambda1, parallelism, &AdjustOptions::default())
}

pub fn adjust_with(
    dataset: &Dataset,
    lambda1: f64,
    parallelism: usize,
    options: &AdjustOptions,
) -> Result<AdjustmentResult> {
    if !(lambda1 > 0.0) || !lambda1.is_finite() {
        return Err(AntacError::InvalidInput(format!(
            "lambda1 must be positive, got {lambda1}"
        )));
    }
    let (x, y) = if options.center {
        (center_columns(dataset.x()), center_columns(dataset.y()))
    } else {
        (dataset.x().clone(), dataset.y().clone())
    };
    let (n, p, q) = (dataset.n(), dataset.p(), dataset.q());
    let y_cols = y.columns();

    if q == 0 {
        let sigma_hat = y_cols
            .iter()
            .map(|c| (norm2(c) / (n as f64).sqrt()).max(theta_floor(c)))
            .collect();
        return Ok(AdjustmentResult {
            gamma_hat: Matrix::zeros(p, 0),
            z_hat: y,
            sigma_hat,
            lambda1,
            centered: options.center,
            failures: Vec::new(),
            fits: vec![None; p],
        });
    }

    let x_cols = x.columns();
    let x_refs: Vec<&[f64]> = x_cols.iter().map(Vec::as_slice).collect();
    let outcomes = par_map(&y_cols, parallelism, |yj| {
        solve_scaled_lasso_columns(yj, &x_refs, lambda1, &options.solver)
    });

    let mut gamma_hat = Matrix::zeros(p, q);
    let mut sigma_hat = Vec::with_capacity(p);
    let mut failures = Vec::new();
    let mut fits = Vec::with_capacity(p);
    for (j, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(fit) => {
                for (k, &b) in fit.coefficients.iter().enumerate() {
                    gamma_hat[(j, k)] = b;
                }
                sigma_hat.push(fit.noise_level);
                if let Err(e) = fit.ensure_converged() {
                    failures.push((j, e));
                }
                fits.push(Some(fit));
            }
            Err(e) => {
                sigma_hat.push(theta_floor(&y_cols[j]));
                failures.push((j, e));
                fits.push(None);
            }
        }
    }
    let z_hat = y.sub(&x.matmul(&gamma_hat.transpose())?)?;
    Ok(AdjustmentResult {
        gamma_hat,
        z_hat,
        sigma_hat,
        lambda1,
        centered: options.center,
        failures,
        fits,
    })
}

fn center_columns(m: &Matrix) -> Matrix {
    let n = m.rows() as f64;
    let means: Vec<f64> = m
        .columns()
        .iter()
        .map(|c| c.iter().sum::<f64>() / n)
        .collect();
    let mut out = m.clone();
    for i in 0..m.rows() {
        for (j, mean) in means.iter().enumerate() {
            out[(i, j)] -= mean;
        }
    }
    out
}
