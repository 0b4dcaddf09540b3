//! Scaled lasso: joint minimization over coefficients `b` and noise level `θ` of
//!
//! ```text
//! ‖R − D·b‖² / (2nθ) + θ/2 + λ Σₖ (‖Dₖ‖/√n)·|bₖ|
//! ```
//!
//! Columns are standardized to `‖Wₖ‖ = √n`, which turns the weighted penalty
//! into a plain `λ‖d‖₁`. The solver alternates between a lasso in `d` at
//! penalty `λθ` (cyclic coordinate descent, warm started) and the closed-form
//! noise update `θ = ‖R − W·d‖/√n`.

use crate::error::{AntacError, Result};
use crate::numerics::{dot, norm2, Matrix};

/// Columns whose norm is at or below `DEGENERATE_COLUMN·√n` are held at zero.
pub const DEGENERATE_COLUMN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative change in `θ` between outer iterations that counts as converged.
    pub tolerance: f64,
    pub max_outer: usize,
    /// Largest coordinate update (relative to `‖R‖/√n`) that ends the inner lasso.
    pub inner_tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-8,
            max_outer: 500,
            inner_tolerance: 1e-9,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLassoProblem {
    response: Vec<f64>,
    design: Matrix,
    lambda: f64,
}

impl ScaledLassoProblem {
    pub fn new(response: Vec<f64>, design: Matrix, lambda: f64) -> Result<Self> {
        validate(&response, design.rows(), lambda)?;
        Ok(ScaledLassoProblem {
            response,
            design,
            lambda,
        })
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }
}

fn validate(response: &[f64], design_rows: usize, lambda: f64) -> Result<()> {
    if response.len() < 2 {
        return Err(AntacError::InvalidInput(format!(
            "scaled lasso needs at least 2 samples, got {}",
            response.len()
        )));
    }
    if response.len() != design_rows {
        return Err(AntacError::DimensionMismatch(format!(
            "response has {} rows but design has {}",
            response.len(),
            design_rows
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(AntacError::InvalidInput(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(AntacError::InvalidInput(
            "response has non-finite entries".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLassoFit {
    /// `b̂` on the original (unstandardized) scale of the design.
    pub coefficients: Vec<f64>,
    /// `θ̂`, never below [`theta_floor`].
    pub noise_level: f64,
    /// Outer (θ) iterations performed.
    pub iterations: usize,
    /// Inner coordinate-descent sweeps, summed over outer iterations.
    pub sweeps: usize,
    /// Worst KKT violation at penalty `λθ̂`.
    pub kkt_residual: f64,
    pub objective: f64,
    /// Objective after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl ScaledLassoFit {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(AntacError::NoConvergence {
                iterations: self.iterations,
            })
        }
    }
}

/// Degenerate-response clamp for `θ`.
pub fn theta_floor(response: &[f64]) -> f64 {
    let n = response.len().max(1) as f64;
    1e-12 * (1.0 + norm2(response) / n.sqrt())
}

pub fn soft_threshold(z: f64, mu: f64) -> f64 {
    if z > mu {
        z - mu
    } else if z < -mu {
        z + mu
    } else {
        0.0
    }
}

/// Design columns viewed through the standardization `Wₖ = Dₖ·√n/‖Dₖ‖`.
struct Standardized<'a> {
    columns: &'a [&'a [f64]],
    /// `√n/‖Dₖ‖`, or 0 for a degenerate column.
    inv_scale: Vec<f64>,
    n: f64,
}

impl<'a> Standardized<'a> {
    fn new(columns: &'a [&'a [f64]], n: usize) -> Self {
        let root_n = (n as f64).sqrt();
        let inv_scale = columns
            .iter()
            .map(|c| {
                let norm = norm2(c);
                if norm <= DEGENERATE_COLUMN * root_n {
                    0.0
                } else {
                    root_n / norm
                }
            })
            .collect();
        Standardized {
            columns,
            inv_scale,
            n: n as f64,
        }
    }

    fn usable(&self, k: usize) -> bool {
        self.inv_scale[k] > 0.0
    }

    /// `Wₖᵀ r / n`.
    fn gradient(&self, k: usize, r: &[f64]) -> f64 {
        self.inv_scale[k] * dot(self.columns[k], r) / self.n
    }

    /// `r -= Wₖ·delta`.
    fn shift_residual(&self, k: usize, delta: f64, r: &mut [f64]) {
        let c = delta * self.inv_scale[k];
        for (ri, &x) in r.iter_mut().zip(self.columns[k]) {
            *ri -= c * x;
        }
    }

    fn residual(&self, response: &[f64], d: &[f64]) -> Vec<f64> {
        let mut r = response.to_vec();
        for (k, &dk) in d.iter().enumerate() {
            if dk != 0.0 {
                self.shift_residual(k, dk, &mut r);
            }
        }
        r
    }
}

/// One cyclic pass over `coords`; returns the largest absolute update.
fn sweep(
    std: &Standardized<'_>,
    coords: impl Iterator<Item = usize>,
    d: &mut [f64],
    r: &mut [f64],
    mu: f64,
) -> f64 {
    let mut max_delta = 0.0_f64;
    for k in coords {
        let old = d[k];
        let new = soft_threshold(old + std.gradient(k, r), mu);
        if new != old {
            std.shift_residual(k, new - old, r);
            d[k] = new;
            max_delta = max_delta.max((new - old).abs());
        }
    }
    max_delta
}

/// Lasso at penalty `mu` by coordinate descent with active-set cycling.
/// Returns `(sweeps, converged)`.
fn coordinate_descent(
    std: &Standardized<'_>,
    d: &mut [f64],
    r: &mut [f64],
    mu: f64,
    tol: f64,
    max_sweeps: usize,
) -> (usize, bool) {
    let m = d.len();
    let mut sweeps = 0;
    let mut active = Vec::with_capacity(m);
    loop {
        let delta = sweep(std, (0..m).filter(|&k| std.usable(k)), d, r, mu);
        sweeps += 1;
        if delta <= tol {
            return (sweeps, true);
        }
        if sweeps >= max_sweeps {
            return (sweeps, false);
        }
        active.clear();
        active.extend((0..m).filter(|&k| d[k] != 0.0));
        loop {
            let delta = sweep(std, active.iter().copied(), d, r, mu);
            sweeps += 1;
            if delta <= tol {
                break;
            }
            if sweeps >= max_sweeps {
                return (sweeps, false);
            }
        }
    }
}

fn objective(r: &[f64], d: &[f64], theta: f64, lambda: f64) -> f64 {
    let n = r.len() as f64;
    dot(r, r) / (2.0 * n * theta) + 0.5 * theta + lambda * d.iter().map(|v| v.abs()).sum::<f64>()
}

pub fn solve_scaled_lasso(
    problem: &ScaledLassoProblem,
    options: &SolverOptions,
) -> Result<ScaledLassoFit> {
    let columns = problem.design.columns();
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    solve_scaled_lasso_columns(&problem.response, &refs, problem.lambda, options)
}

/// Column-oriented entry point: `columns[k]` is the k-th design column.
pub fn solve_scaled_lasso_columns(
    response: &[f64],
    columns: &[&[f64]],
    lambda: f64,
    options: &SolverOptions,
) -> Result<ScaledLassoFit> {
    let n = response.len();
    if let Some(bad) = columns.iter().position(|c| c.len() != n) {
        return Err(AntacError::DimensionMismatch(format!(
            "design column {bad} has {} rows, response has {n}",
            columns[bad].len()
        )));
    }
    validate(response, n, lambda)?;

    let std = Standardized::new(columns, n);
    let root_n = (n as f64).sqrt();
    let floor = theta_floor(response);
    let response_scale = (norm2(response) / root_n).max(floor);
    let inner_tol = options.inner_tolerance * response_scale;

    let m = columns.len();
    let mut d = vec![0.0; m];
    let mut r = response.to_vec();
    let mut theta = response_scale;
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_outer {
        iterations += 1;
        let (s, inner_ok) = coordinate_descent(
            &std,
            &mut d,
            &mut r,
            lambda * theta,
            inner_tol,
            options.max_sweeps.saturating_sub(sweeps).max(1),
        );
        sweeps += s;
        let next = (norm2(&r) / root_n).max(floor);
        trace.push(objective(&r, &d, next, lambda));
        let done = (next - theta).abs() <= options.tolerance * next;
        theta = next;
        if !inner_ok {
            break;
        }
        if done {
            converged = true;
            break;
        }
    }

    // Recompute the residual from scratch so the reported θ is exactly stationary.
    let r = std.residual(response, &d);
    let noise_level = (norm2(&r) / root_n).max(floor);
    let mu = lambda * noise_level;
    let kkt_residual = (0..m)
        .filter(|&k| std.usable(k))
        .map(|k| coordinate_violation(std.gradient(k, &r), d[k], mu))
        .fold(0.0, f64::max);
    let coefficients = d
        .iter()
        .zip(&std.inv_scale)
        .map(|(&dk, &s)| dk * s)
        .collect();

    Ok(ScaledLassoFit {
        coefficients,
        noise_level,
        iterations,
        sweeps,
        kkt_residual,
        objective: objective(&r, &d, noise_level, lambda),
        objective_trace: trace,
        converged,
    })
}

/// Plain lasso `min ‖R − W·d‖²/(2n) + μ‖d‖₁` on a design whose columns
/// already satisfy `‖Wₖ‖ = √n`.
pub fn lasso_inner(
    response: &[f64],
    design_standardized: &Matrix,
    penalty: f64,
    options: &SolverOptions,
) -> Result<Vec<f64>> {
    let n = response.len();
    if design_standardized.rows() != n {
        return Err(AntacError::DimensionMismatch(format!(
            "response has {n} rows but design has {}",
            design_standardized.rows()
        )));
    }
    if !(penalty >= 0.0) {
        return Err(AntacError::InvalidInput(format!(
            "penalty must be nonnegative, got {penalty}"
        )));
    }
    let columns = design_standardized.columns();
    let root_n = (n as f64).sqrt();
    for (k, c) in columns.iter().enumerate() {
        if (norm2(c) - root_n).abs() > 1e-8 * root_n {
            return Err(AntacError::InvalidInput(format!(
                "column {k} is not standardized to norm sqrt(n)"
            )));
        }
    }
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let std = Standardized::new(&refs, n);
    let mut d = vec![0.0; columns.len()];
    let mut r = response.to_vec();
    let tol = options.inner_tolerance * (norm2(response) / root_n).max(f64::MIN_POSITIVE);
    let (sweeps, ok) = coordinate_descent(&std, &mut d, &mut r, penalty, tol, options.max_sweeps);
    if !ok {
        return Err(AntacError::NoConvergence { iterations: sweeps });
    }
    Ok(d)
}

fn coordinate_violation(gradient: f64, dk: f64, mu: f64) -> f64 {
    if dk != 0.0 {
        (gradient - mu * dk.signum()).abs()
    } else {
        (gradient.abs() - mu).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateKkt {
    pub index: usize,
    pub active: bool,
    /// Held at zero because the column norm is degenerate.
    pub excluded: bool,
    /// `Wₖᵀ(R − W·d̂)/n`.
    pub gradient: f64,
    pub violation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// `μ = λθ̂`.
    pub penalty: f64,
    pub coordinates: Vec<CoordinateKkt>,
    pub worst_violation: f64,
    pub worst_index: Option<usize>,
    /// `|θ̂ − max(‖R − D·b̂‖/√n, θ_floor)| / θ̂`.
    pub theta_violation: f64,
    pub theta_passed: bool,
    pub passed: bool,
}

impl KktReport {
    pub fn failing(&self) -> impl Iterator<Item = &CoordinateKkt> {
        self.coordinates.iter().filter(|c| !c.passed)
    }
}

/// Check the lasso optimality conditions at `μ = λθ̂` and the stationarity of `θ̂`.
pub fn kkt_check(problem: &ScaledLassoProblem, fit: &ScaledLassoFit, tol: f64) -> KktReport {
    let n = problem.n();
    let columns = problem.design.columns();
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let std = Standardized::new(&refs, n);
    let d: Vec<f64> = fit
        .coefficients
        .iter()
        .zip(&std.inv_scale)
        .map(|(&b, &s)| if s > 0.0 { b / s } else { b })
        .collect();
    let r = std.residual(&problem.response, &d);
    let floor = theta_floor(&problem.response);
    let theta = fit.noise_level;
    let mu = problem.lambda * theta;

    let coordinates: Vec<CoordinateKkt> = (0..d.len())
        .map(|k| {
            if !std.usable(k) {
                let passed = fit.coefficients[k] == 0.0;
                return CoordinateKkt {
                    index: k,
                    active: false,
                    excluded: true,
                    gradient: 0.0,
                    violation: if passed {
                        0.0
                    } else {
                        fit.coefficients[k].abs()
                    },
                    passed,
                };
            }
            let gradient = std.gradient(k, &r);
            let violation = coordinate_violation(gradient, d[k], mu);
            CoordinateKkt {
                index: k,
                active: d[k] != 0.0,
                excluded: false,
                gradient,
                violation,
                passed: violation <= tol,
            }
        })
        .collect();
    let (worst_index, worst_violation) = coordinates
        .iter()
        .map(|c| (Some(c.index), c.violation))
        .fold((None, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let target = (norm2(&r) / (n as f64).sqrt()).max(floor);
    let theta_violation = (theta - target).abs() / theta.max(floor);
    let theta_passed = theta_violation <= tol;
    let passed = theta_passed && coordinates.iter().all(|c| c.passed);
    KktReport {
        penalty: mu,
        coordinates,
        worst_violation,
        worst_index,
        theta_violation,
        theta_passed,
        passed,
    }
}
