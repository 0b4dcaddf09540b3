//! Python bindings for `antac-core`.
//!
//! Matrices cross the boundary as lists of rows and pair indices are 0-based.

use antac_core::adjust::{default_s_max1, Lambda1Mode};
use antac_core::edge::{default_s_max2, EdgePair, Lambda2Mode, PairSelection};
use antac_core::numerics::RngStream;
use antac_core::pipeline::SelectionRule;
use antac_core::simgen::{generate_truth, simulate_with_noise, Family};
use antac_core::{AntacError, Dataset, FitConfig, Matrix, ModelSpec, SupportMask};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: AntacError) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn matrix(rows: &[Vec<f64>], name: &str) -> PyResult<Matrix> {
    Matrix::from_rows(rows).map_err(|e| PyValueError::new_err(format!("{name}: {e}")))
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

fn parse_lambda1_mode(mode: &str) -> PyResult<Lambda1Mode> {
    match mode {
        "finite_sample" => Ok(Lambda1Mode::FiniteSample),
        "asymptotic" => Ok(Lambda1Mode::Asymptotic),
        other => Err(PyValueError::new_err(format!(
            "unknown lambda1 mode '{other}'"
        ))),
    }
}

fn parse_lambda2_mode(mode: &str) -> PyResult<Lambda2Mode> {
    match mode {
        "estimation" => Ok(Lambda2Mode::Estimation),
        "support_recovery" => Ok(Lambda2Mode::SupportRecovery),
        "asymptotic" => Ok(Lambda2Mode::Asymptotic),
        other => Err(PyValueError::new_err(format!(
            "unknown lambda2 mode '{other}'"
        ))),
    }
}

fn pairs(list: &[(usize, usize)], p: usize) -> PyResult<Vec<EdgePair>> {
    list.iter()
        .map(|&(a, b)| EdgePair::new(a, b, p).map_err(to_py))
        .collect()
}

/// Step 1 penalty.
#[pyfunction]
#[pyo3(signature = (n, p, q, s_max1=None, mode="finite_sample"))]
fn lambda1(n: usize, p: usize, q: usize, s_max1: Option<f64>, mode: &str) -> PyResult<f64> {
    let s = s_max1.unwrap_or_else(|| default_s_max1(n, q));
    antac_core::lambda1(n, p, q, s, parse_lambda1_mode(mode)?).map_err(to_py)
}

/// Step 2 penalty.
#[pyfunction]
#[pyo3(signature = (n, p, s_max2=None, mode="estimation"))]
fn lambda2(n: usize, p: usize, s_max2: Option<f64>, mode: &str) -> PyResult<f64> {
    let s = s_max2.unwrap_or_else(|| default_s_max2(n, p));
    antac_core::lambda2(n, p, s, parse_lambda2_mode(mode)?).map_err(to_py)
}

#[pyclass(get_all, frozen)]
struct ScaledLasso {
    coefficients: Vec<f64>,
    noise_level: f64,
    converged: bool,
    iterations: usize,
}

/// Scaled lasso of `y` on the columns of `x` (rows are samples).
#[pyfunction]
fn solve_scaled_lasso(y: Vec<f64>, x: Vec<Vec<f64>>, lam: f64) -> PyResult<ScaledLasso> {
    let problem = antac_core::ScaledLassoProblem::new(y, matrix(&x, "x")?, lam).map_err(to_py)?;
    let fit = antac_core::solve_scaled_lasso(&problem, &antac_core::SolverOptions::default())
        .map_err(to_py)?;
    Ok(ScaledLasso {
        iterations: fit.objective_trace.len(),
        coefficients: fit.coefficients,
        noise_level: fit.noise_level,
        converged: fit.converged,
    })
}

#[pyclass(get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct Edge {
    i: usize,
    j: usize,
    omega_ij: f64,
    omega_ii: f64,
    omega_jj: f64,
    se: f64,
    z: f64,
    pvalue: f64,
    qvalue: f64,
    partial_corr: f64,
    selected: bool,
}

#[pymethods]
impl Edge {
    fn __repr__(&self) -> String {
        format!(
            "Edge(i={}, j={}, omega_ij={:.4}, se={:.4}, pvalue={:.3e}, selected={})",
            self.i, self.j, self.omega_ij, self.se, self.pvalue, self.selected
        )
    }
}

#[pyclass(get_all, frozen)]
struct Fit {
    lambda1: Option<f64>,
    lambda2: f64,
    edges: Vec<Edge>,
    omega_hat: Vec<Vec<f64>>,
    omega_thresholded: Vec<Vec<f64>>,
    gamma_hat: Vec<Vec<f64>>,
    failed_pairs: Vec<(usize, usize)>,
    failed_columns: Vec<usize>,
}

/// Full two-step fit. `x=None` skips covariate adjustment.
#[pyfunction]
#[pyo3(signature = (y, x=None, *, xi0=2.0, lambda1=None, lambda2=None, lambda2_mode=None, fdr=None, edges=None, threads=1))]
#[allow(clippy::too_many_arguments)]
fn fit(
    y: Vec<Vec<f64>>,
    x: Option<Vec<Vec<f64>>>,
    xi0: f64,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    lambda2_mode: Option<&str>,
    fdr: Option<f64>,
    edges: Option<Vec<(usize, usize)>>,
    threads: usize,
) -> PyResult<Fit> {
    let y = matrix(&y, "y")?;
    let data = match x {
        Some(x) if !x.is_empty() && !x[0].is_empty() => Dataset::new(matrix(&x, "x")?, y),
        _ => Dataset::responses_only(y),
    }
    .map_err(to_py)?;
    let p = data.p();
    let mut cfg = FitConfig {
        xi0,
        lambda1,
        lambda2,
        parallelism: threads.max(1),
        ..FitConfig::default()
    };
    if let Some(m) = lambda2_mode {
        cfg.lambda2_mode = Some(parse_lambda2_mode(m)?);
    }
    if let Some(alpha) = fdr {
        cfg.selection = SelectionRule::Fdr;
        cfg.fdr_alpha = alpha;
    }
    if let Some(list) = edges {
        cfg.pairs = PairSelection::List(pairs(&list, p)?);
    }
    let r = antac_core::fit(&data, &cfg).map_err(to_py)?;
    let n = r.estimate.n;
    let mut thresholded = r.estimate.assembled.clone();
    let edges = r
        .estimate
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let selected = r.selected(k);
            if !selected {
                thresholded[(e.pair.i, e.pair.j)] = 0.0;
                thresholded[(e.pair.j, e.pair.i)] = 0.0;
            }
            Edge {
                i: e.pair.i,
                j: e.pair.j,
                omega_ij: e.omega_ij,
                omega_ii: e.omega_ii,
                omega_jj: e.omega_jj,
                se: e.standard_error(n),
                z: e.z_score,
                pvalue: e.p_value,
                qvalue: r.q_values[k],
                partial_corr: e.partial_corr,
                selected,
            }
        })
        .collect();
    Ok(Fit {
        lambda1: (!r.lambda1.value.is_nan()).then_some(r.lambda1.value),
        lambda2: r.lambda2.value,
        edges,
        omega_hat: rows(&r.estimate.assembled),
        omega_thresholded: rows(&thresholded),
        gamma_hat: rows(&r.adjustment.gamma_hat),
        failed_pairs: r
            .estimate
            .failures
            .iter()
            .map(|(e, _)| (e.i, e.j))
            .collect(),
        failed_columns: r.adjustment.failed_columns(),
    })
}

/// Benjamini-Hochberg q-values.
#[pyfunction]
fn fdr_adjust(pvalues: Vec<f64>) -> PyResult<Vec<f64>> {
    antac_core::fdr_adjust(&pvalues).map_err(to_py)
}

#[pyclass(get_all, frozen)]
struct Simulation {
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
    omega: Vec<Vec<f64>>,
    support: Vec<(usize, usize)>,
}

/// Draw the model for `seed` and replicate `replicate` (1-based) from it.
#[pyfunction]
#[pyo3(signature = (family, *, n, p=None, q=100, pi=0.025, diag=4.0, gamma_prob=None, seed=1, replicate=1))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    family: &str,
    n: usize,
    p: Option<usize>,
    q: usize,
    pi: f64,
    diag: f64,
    gamma_prob: Option<f64>,
    seed: u64,
    replicate: u64,
) -> PyResult<Simulation> {
    let need_p = || p.ok_or_else(|| PyValueError::new_err(format!("family {family} needs p")));
    let mut spec = match Family::parse(family).map_err(to_py)? {
        Family::TableOne => ModelSpec::table_one(need_p()?, q, n, pi, diag, seed),
        Family::Homogeneous => ModelSpec::homogeneous(need_p()?, q, n, pi, seed),
        Family::MagnifiedBlock => ModelSpec::magnified_block(n, seed),
        Family::HeteroProduct => ModelSpec::hetero_product(n, seed),
        Family::Custom => ModelSpec::custom(need_p()?, q, n, pi, diag, seed),
    };
    spec.q = q;
    if let Some(g) = gamma_prob {
        spec.gamma_prob = g;
    }
    let truth = generate_truth(&spec, &mut RngStream::new(seed, 0).rng()).map_err(to_py)?;
    let sim = simulate_with_noise(&truth, n, &mut RngStream::new(seed, replicate).rng())
        .map_err(to_py)?;
    Ok(Simulation {
        x: rows(sim.dataset.x()),
        y: rows(sim.dataset.y()),
        z: rows(&sim.z),
        gamma: rows(&truth.gamma),
        omega: rows(&truth.omega),
        support: truth.support.pairs().map(|e| (e.i, e.j)).collect(),
    })
}

#[pyclass(get_all, frozen)]
struct Metrics {
    misr: Option<f64>,
    spe: Option<f64>,
    sen: Option<f64>,
    pre: Option<f64>,
    mcc: Option<f64>,
    tp: u64,
    tn: u64,
    fp: u64,
    #[pyo3(name = "fn")]
    fn_: u64,
}

/// Support-recovery scores for an estimated edge set against the truth.
#[pyfunction]
fn compute_metrics(
    estimated: Vec<(usize, usize)>,
    truth: Vec<(usize, usize)>,
    p: usize,
) -> PyResult<Metrics> {
    let to_mask = |list: &[(usize, usize)]| -> PyResult<SupportMask> {
        let mut m = SupportMask::new(p);
        for e in pairs(list, p)? {
            m.insert(e, 1).map_err(to_py)?;
        }
        Ok(m)
    };
    let c = antac_core::confusion(&to_mask(&estimated)?, &to_mask(&truth)?).map_err(to_py)?;
    let r = antac_core::compute_metrics(&c, p).map_err(to_py)?;
    Ok(Metrics {
        misr: r.misr,
        spe: r.spe,
        sen: r.sen,
        pre: r.pre,
        mcc: r.mcc,
        tp: c.tp,
        tn: c.tn,
        fp: c.fp,
        fn_: c.fn_,
    })
}

#[pymodule]
fn antac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(lambda1, m)?)?;
    m.add_function(wrap_pyfunction!(lambda2, m)?)?;
    m.add_function(wrap_pyfunction!(solve_scaled_lasso, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(fdr_adjust, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_class::<Edge>()?;
    m.add_class::<Fit>()?;
    m.add_class::<ScaledLasso>()?;
    m.add_class::<Simulation>()?;
    m.add_class::<Metrics>()?;
    Ok(())
}
