//! Option groups shared by the subcommands and the study config file.

use std::path::Path;

use antac_core::pipeline::{LambdaSource, ResolvedLambda};
use antac_core::simgen::Family;
use antac_core::{
    EdgePair, FitConfig, Lambda1Mode, Lambda2Mode, ModelSpec, PairSelection, SelectionRule,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use crate::table::{fmt_f64, parse_value, Table};

/// Estimation tunables. Unset fields fall back to the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    /// Threshold multiplier ξ₀ in τᵢⱼ = √(2ξ₀ F⁻¹ log p / n) [default: 2].
    #[arg(long)]
    pub xi0: Option<f64>,
    /// Fixed Step 1 penalty instead of the formula.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Fixed Step 2 penalty instead of the formula.
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// finite_sample or asymptotic [default: finite_sample].
    #[arg(long)]
    pub lambda1_mode: Option<String>,
    /// estimation, support_recovery or asymptotic [default: support_recovery
    /// with thresholding, estimation with --fdr].
    #[arg(long)]
    pub lambda2_mode: Option<String>,
    /// Sparsity guess for Step 1 [default: √n / log q].
    #[arg(long)]
    pub s_max1: Option<f64>,
    /// Sparsity guess for Step 2 [default: √n / log p].
    #[arg(long)]
    pub s_max2: Option<f64>,
    /// Select edges by BH q-value at this level instead of thresholding.
    #[arg(long)]
    pub fdr: Option<f64>,
    /// Center X and Y columns before fitting.
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    pub center: Option<bool>,
}

fn parse_lambda1_mode(s: &str) -> CliResult<Lambda1Mode> {
    match s {
        "finite_sample" | "finite" => Ok(Lambda1Mode::FiniteSample),
        "asymptotic" => Ok(Lambda1Mode::Asymptotic),
        other => Err(CliError::input(format!(
            "unknown lambda1 mode '{other}' (expected finite_sample or asymptotic)"
        ))),
    }
}

fn parse_lambda2_mode(s: &str) -> CliResult<Lambda2Mode> {
    match s {
        "estimation" => Ok(Lambda2Mode::Estimation),
        "support_recovery" | "support" => Ok(Lambda2Mode::SupportRecovery),
        "asymptotic" => Ok(Lambda2Mode::Asymptotic),
        other => Err(CliError::input(format!(
            "unknown lambda2 mode '{other}' (expected estimation, support_recovery or asymptotic)"
        ))),
    }
}

fn lambda2_mode_name(m: Lambda2Mode) -> &'static str {
    match m {
        Lambda2Mode::Asymptotic => "asymptotic",
        Lambda2Mode::Estimation => "estimation",
        Lambda2Mode::SupportRecovery => "support_recovery",
    }
}

fn source(set: bool, label: &str) -> &str {
    if set {
        label
    } else {
        "default"
    }
}

impl FitOptions {
    /// Build the fit configuration and record every tunable it fixes.
    ///
    /// `label` is the provenance written for explicitly set values.
    pub fn resolve(&self, label: &str, manifest: &mut Manifest) -> CliResult<FitConfig> {
        let mut cfg = FitConfig::default();
        if let Some(x) = self.xi0 {
            if !(x > 0.0 && x.is_finite()) {
                return Err(CliError::input(format!("xi0 must be positive, got {x}")));
            }
            cfg.xi0 = x;
        }
        if let Some(a) = self.fdr {
            if !(a > 0.0 && a < 1.0) {
                return Err(CliError::input(format!(
                    "fdr level must lie in (0, 1), got {a}"
                )));
            }
            cfg.selection = SelectionRule::Fdr;
            cfg.fdr_alpha = a;
        }
        if let Some(m) = &self.lambda1_mode {
            cfg.lambda1_mode = parse_lambda1_mode(m)?;
        }
        if let Some(m) = &self.lambda2_mode {
            cfg.lambda2_mode = Some(parse_lambda2_mode(m)?);
        }
        for (name, v) in [("s_max1", self.s_max1), ("s_max2", self.s_max2)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::input(format!("{name} must be positive, got {v}")));
                }
            }
        }
        cfg.lambda1 = self.lambda1;
        cfg.lambda2 = self.lambda2;
        cfg.s_max1 = self.s_max1;
        cfg.s_max2 = self.s_max2;
        cfg.center = self.center.unwrap_or(false);

        let selection = match cfg.selection {
            SelectionRule::Threshold => "threshold",
            SelectionRule::Fdr => "fdr",
        };
        manifest.tunable("selection", selection, source(self.fdr.is_some(), label));
        manifest.tunable("xi0", fmt_f64(cfg.xi0), source(self.xi0.is_some(), label));
        manifest.tunable(
            "fdr_alpha",
            fmt_f64(cfg.fdr_alpha),
            source(self.fdr.is_some(), label),
        );
        let l2_mode_source = if self.lambda2_mode.is_some() {
            label.to_string()
        } else {
            format!("default(selection={selection})")
        };
        manifest.tunable(
            "lambda2.mode",
            lambda2_mode_name(cfg.effective_lambda2_mode()),
            &l2_mode_source,
        );
        manifest.tunable("center", cfg.center, source(self.center.is_some(), label));
        manifest.tunable("solver.tolerance", fmt_f64(cfg.solver.tolerance), "default");
        manifest.tunable("solver.max_outer", cfg.solver.max_outer, "default");
        manifest.tunable(
            "solver.inner_tolerance",
            fmt_f64(cfg.solver.inner_tolerance),
            "default",
        );
        manifest.tunable("solver.max_sweeps", cfg.solver.max_sweeps, "default");
        Ok(cfg)
    }
}

/// Record resolved penalties together with their sparsity guesses.
pub fn record_lambdas(
    manifest: &mut Manifest,
    label: &str,
    l1: &ResolvedLambda,
    l2: &ResolvedLambda,
) {
    for (name, r) in [("lambda1", l1), ("lambda2", l2)] {
        let (value, src) = match r.source {
            LambdaSource::Override => (fmt_f64(r.value), label.to_string()),
            LambdaSource::Formula { mode, .. } => (fmt_f64(r.value), format!("formula:{mode}")),
            LambdaSource::NotUsed => ("not_used".to_string(), "no_covariates".to_string()),
        };
        manifest.tunable(name, value, &src);
        let key = format!("{name}.s_max");
        match r.source {
            LambdaSource::Formula {
                s_max: Some(s),
                s_max_default,
                ..
            } => {
                let how = if s_max_default {
                    let d = if name == "lambda1" {
                        "sqrt(n)/log(q)"
                    } else {
                        "sqrt(n)/log(p)"
                    };
                    format!("default({d})")
                } else {
                    label.to_string()
                };
                manifest.tunable(&key, fmt_f64(s), &how);
            }
            _ => manifest.tunable(&key, "not_used", "not_used"),
        }
    }
}

/// Model family and sizes for `simulate` and `study`.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    /// table_one, homogeneous, magnified_block, hetero_product or custom.
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Off-diagonal density of Ω.
    #[arg(long)]
    pub pi: Option<f64>,
    /// Density of Γ.
    #[arg(long)]
    pub gamma_prob: Option<f64>,
    /// Diagonal of Ω for table_one and custom.
    #[arg(long)]
    pub diag: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub const DEFAULT_SEED: u64 = 1;

impl ModelOptions {
    pub fn resolve(&self, label: &str, manifest: &mut Manifest) -> CliResult<ModelSpec> {
        let family = Family::parse(&self.family)?;
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        let fixed_p = match family {
            Family::MagnifiedBlock => Some(150),
            Family::HeteroProduct => Some(200),
            _ => None,
        };
        if let (Some(fp), Some(p)) = (fixed_p, self.p) {
            if p != fp {
                return Err(CliError::input(format!(
                    "family {} has p = {fp}, got --p {p}",
                    family.name()
                )));
            }
        }
        let mut spec = match family {
            Family::TableOne => ModelSpec::table_one(200, 100, 400, 0.025, 4.0, seed),
            Family::Homogeneous => ModelSpec::homogeneous(200, 100, 300, 0.025, seed),
            Family::MagnifiedBlock => ModelSpec::magnified_block(300, seed),
            Family::HeteroProduct => ModelSpec::hetero_product(300, seed),
            Family::Custom => ModelSpec::custom(50, 20, 200, 0.05, 2.0, seed),
        };
        let pi_used = matches!(
            family,
            Family::TableOne | Family::Homogeneous | Family::Custom
        );
        let diag_used = matches!(family, Family::TableOne | Family::Custom);
        if self.pi.is_some() && !pi_used {
            return Err(CliError::input(format!(
                "--pi does not apply to family {}",
                family.name()
            )));
        }
        if self.diag.is_some() && !diag_used {
            return Err(CliError::input(format!(
                "--diag does not apply to family {}",
                family.name()
            )));
        }
        spec.p = self.p.unwrap_or(spec.p);
        spec.q = self.q.unwrap_or(spec.q);
        spec.n = self.n.unwrap_or(spec.n);
        spec.omega_prob = self.pi.unwrap_or(spec.omega_prob);
        spec.gamma_prob = self.gamma_prob.unwrap_or(spec.gamma_prob);
        spec.diag_value = self.diag.unwrap_or(spec.diag_value);
        spec.validate()?;

        manifest.set("model.family", family.name());
        let p_source = if fixed_p.is_some() {
            "family"
        } else {
            source(self.p.is_some(), label)
        };
        manifest.tunable("model.p", spec.p, p_source);
        manifest.tunable("model.q", spec.q, source(self.q.is_some(), label));
        manifest.tunable("model.n", spec.n, source(self.n.is_some(), label));
        if pi_used {
            manifest.tunable(
                "model.pi",
                fmt_f64(spec.omega_prob),
                source(self.pi.is_some(), label),
            );
        } else {
            manifest.tunable("model.pi", "not_used", "family");
        }
        manifest.tunable(
            "model.gamma_prob",
            fmt_f64(spec.gamma_prob),
            source(self.gamma_prob.is_some(), label),
        );
        if diag_used {
            manifest.tunable(
                "model.diag",
                fmt_f64(spec.diag_value),
                source(self.diag.is_some(), label),
            );
        } else {
            manifest.tunable("model.diag", "not_used", "family");
        }
        manifest.tunable("model.seed", seed, source(self.seed.is_some(), label));
        Ok(spec)
    }
}

/// Parse `1-2,3-4` (1-based, either order within a pair) into pairs.
pub fn parse_pair_list(spec: &str, p: usize) -> CliResult<Vec<EdgePair>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (a, b) = item
            .split_once('-')
            .ok_or_else(|| CliError::input(format!("edge '{item}' is not of the form i-j")))?;
        let parse = |s: &str| -> CliResult<usize> {
            let v: usize = s
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("edge '{item}': '{s}' is not an index")))?;
            if v == 0 {
                return Err(CliError::input(format!(
                    "edge '{item}': indices start at 1"
                )));
            }
            Ok(v - 1)
        };
        out.push(EdgePair::new(parse(a)?, parse(b)?, p)?);
    }
    if out.is_empty() {
        return Err(CliError::input("edge list is empty"));
    }
    Ok(out)
}

/// `all`, a pair list, or a CSV file with 1-based `i,j` columns.
pub fn parse_edges(spec: &str, p: usize) -> CliResult<PairSelection> {
    if spec == "all" {
        return Ok(PairSelection::All);
    }
    let path = Path::new(spec);
    if path.is_file() {
        let table = Table::read(path)?;
        let (ci, cj) = (
            table.column_index("i", path)?,
            table.column_index("j", path)?,
        );
        let mut items = Vec::with_capacity(table.rows.len());
        for (r, row) in table.rows.iter().enumerate() {
            let i = parse_value(&row[ci], r + 1, "i", path)?;
            let j = parse_value(&row[cj], r + 1, "j", path)?;
            items.push(format!("{i}-{j}"));
        }
        return Ok(PairSelection::List(parse_pair_list(&items.join(","), p)?));
    }
    Ok(PairSelection::List(parse_pair_list(spec, p)?))
}

pub fn format_pairs(pairs: &[EdgePair]) -> String {
    pairs
        .iter()
        .map(|e| format!("{}-{}", e.i + 1, e.j + 1))
        .collect::<Vec<_>>()
        .join(",")
}

/// Explicit count, then the config value, then every available core.
pub fn resolve_threads(flag: Option<usize>, config: Option<usize>) -> CliResult<usize> {
    match flag.or(config) {
        Some(0) => Err(CliError::input("thread count must be at least 1")),
        Some(t) => Ok(t),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
