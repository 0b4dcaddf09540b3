//! The two-step fit: covariate adjustment, per-edge estimation, then edge
//! selection by adaptive thresholding or FDR.

use crate::adjust::{
    adjust_with, default_s_max1, lambda1, AdjustOptions, AdjustmentResult, Dataset, Lambda1Mode,
};
use crate::edge::{
    default_s_max2, estimate_graph_with, lambda2, GraphOptions, Lambda2Mode, PairSelection,
    PrecisionEstimate,
};
use crate::error::{AntacError, Result};
use crate::inference::{
    antac_threshold, cap_estimator, fdr_adjust, fdr_select, SupportMask, ThresholdedPrecision,
};
use crate::scaled_lasso::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    /// `|ω̂ᵢⱼ| ≥ τᵢⱼ(ξ₀)`.
    Threshold,
    /// BH q-value at most `fdr_alpha`.
    Fdr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub lambda1_mode: Lambda1Mode,
    pub lambda1: Option<f64>,
    pub s_max1: Option<f64>,
    /// `None` picks support-recovery mode for thresholding and estimation mode for FDR.
    pub lambda2_mode: Option<Lambda2Mode>,
    pub lambda2: Option<f64>,
    pub s_max2: Option<f64>,
    pub xi0: f64,
    pub fdr_alpha: f64,
    pub selection: SelectionRule,
    pub pairs: PairSelection,
    pub parallelism: usize,
    pub center: bool,
    pub solver: SolverOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda1_mode: Lambda1Mode::FiniteSample,
            lambda1: None,
            s_max1: None,
            lambda2_mode: None,
            lambda2: None,
            s_max2: None,
            xi0: 2.0,
            fdr_alpha: 0.05,
            selection: SelectionRule::Threshold,
            pairs: PairSelection::All,
            parallelism: 1,
            center: false,
            solver: SolverOptions::default(),
        }
    }
}

impl FitConfig {
    pub fn effective_lambda2_mode(&self) -> Lambda2Mode {
        self.lambda2_mode.unwrap_or(match self.selection {
            SelectionRule::Threshold => Lambda2Mode::SupportRecovery,
            SelectionRule::Fdr => Lambda2Mode::Estimation,
        })
    }
}

/// Where a resolved penalty came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSource {
    Override,
    Formula {
        mode: &'static str,
        s_max: Option<f64>,
        s_max_default: bool,
    },
    /// No covariates, so Step 1 was skipped.
    NotUsed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedLambda {
    pub value: f64,
    pub source: LambdaSource,
}

/// Mode label used when the finite-sample formula is undefined because the
/// sparsity guess is too close to the dimension, and the asymptotic form is used instead.
pub const FALLBACK: &str = "asymptotic_fallback";

pub fn resolve_lambda1(n: usize, p: usize, q: usize, cfg: &FitConfig) -> Result<ResolvedLambda> {
    if let Some(v) = cfg.lambda1 {
        if !(v > 0.0) || !v.is_finite() {
            return Err(AntacError::InvalidInput(format!(
                "lambda1 override must be positive, got {v}"
            )));
        }
        return Ok(ResolvedLambda {
            value: v,
            source: LambdaSource::Override,
        });
    }
    if q == 0 {
        return Ok(ResolvedLambda {
            value: f64::NAN,
            source: LambdaSource::NotUsed,
        });
    }
    let s = cfg.s_max1.unwrap_or_else(|| default_s_max1(n, q));
    let s_max_default = cfg.s_max1.is_none();
    let (value, mode, s_max) = match cfg.lambda1_mode {
        Lambda1Mode::Asymptotic => (
            lambda1(n, p, q, s, Lambda1Mode::Asymptotic)?,
            "asymptotic",
            None,
        ),
        Lambda1Mode::FiniteSample => match lambda1(n, p, q, s, Lambda1Mode::FiniteSample) {
            Ok(v) => (v, "finite_sample", Some(s)),
            Err(AntacError::Domain(_)) => (
                lambda1(n, p, q, s, Lambda1Mode::Asymptotic)?,
                FALLBACK,
                Some(s),
            ),
            Err(e) => return Err(e),
        },
    };
    Ok(ResolvedLambda {
        value,
        source: LambdaSource::Formula {
            mode,
            s_max,
            s_max_default,
        },
    })
}

pub fn resolve_lambda2(n: usize, p: usize, cfg: &FitConfig) -> Result<ResolvedLambda> {
    if let Some(v) = cfg.lambda2 {
        if !(v > 0.0) || !v.is_finite() {
            return Err(AntacError::InvalidInput(format!(
                "lambda2 override must be positive, got {v}"
            )));
        }
        return Ok(ResolvedLambda {
            value: v,
            source: LambdaSource::Override,
        });
    }
    let mode = cfg.effective_lambda2_mode();
    let s = cfg.s_max2.unwrap_or_else(|| default_s_max2(n, p));
    let (mut name, s_max) = match mode {
        Lambda2Mode::Asymptotic => ("asymptotic", None),
        Lambda2Mode::Estimation => ("estimation", Some(s)),
        Lambda2Mode::SupportRecovery => ("support_recovery", Some(s)),
    };
    let value = match lambda2(n, p, s, mode) {
        Ok(v) => v,
        Err(AntacError::Domain(_)) if mode != Lambda2Mode::Asymptotic => {
            name = FALLBACK;
            lambda2(n, p, s, Lambda2Mode::Asymptotic)?
        }
        Err(e) => return Err(e),
    };
    Ok(ResolvedLambda {
        value,
        source: LambdaSource::Formula {
            mode: name,
            s_max,
            s_max_default: cfg.s_max2.is_none(),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub lambda1: ResolvedLambda,
    pub lambda2: ResolvedLambda,
    pub adjustment: AdjustmentResult,
    pub estimate: PrecisionEstimate,
    /// BH q-values aligned with `estimate.edges`.
    pub q_values: Vec<f64>,
    pub support: SupportMask,
    pub thresholded: ThresholdedPrecision,
    pub capped: ThresholdedPrecision,
}

impl FitResult {
    pub fn selected(&self, k: usize) -> bool {
        self.support.contains(&self.estimate.edges[k].pair)
    }

    pub fn has_failures(&self) -> bool {
        !self.adjustment.failures.is_empty() || !self.estimate.failures.is_empty()
    }
}

pub fn fit(dataset: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
    let (n, p, q) = (dataset.n(), dataset.p(), dataset.q());
    let l1 = resolve_lambda1(n, p, q, cfg)?;
    let l2 = resolve_lambda2(n, p, cfg)?;
    let adjust_opts = AdjustOptions {
        center: cfg.center,
        solver: cfg.solver,
    };
    // With q = 0 the penalty is never used; any positive value passes validation.
    let l1_value = if l1.value.is_nan() { 1.0 } else { l1.value };
    let mut adjustment = adjust_with(dataset, l1_value, cfg.parallelism, &adjust_opts)?;
    adjustment.lambda1 = l1.value;

    let graph_opts = GraphOptions {
        lambda2: l2.value,
        parallelism: cfg.parallelism,
        excluded: adjustment.failed_columns(),
        solver: cfg.solver,
    };
    let estimate = estimate_graph_with(&adjustment.z_hat, &cfg.pairs, &graph_opts)?;
    let p_values: Vec<f64> = estimate.edges.iter().map(|e| e.p_value).collect();
    let q_values = fdr_adjust(&p_values)?;
    let (threshold_support, thresholded) = antac_threshold(&estimate.edges, n, p, cfg.xi0);
    let support = match cfg.selection {
        SelectionRule::Threshold => threshold_support,
        SelectionRule::Fdr => fdr_select(&estimate.edges, &q_values, p, cfg.fdr_alpha),
    };
    let capped = cap_estimator(&thresholded, p);
    Ok(FitResult {
        lambda1: l1,
        lambda2: l2,
        adjustment,
        estimate,
        q_values,
        support,
        thresholded,
        capped,
    })
}
