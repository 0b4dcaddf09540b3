//! Replicate studies: one fixed ground truth, many independently sampled
//! datasets, each fit and scored, then aggregated.
//!
//! The truth is drawn from stream 0 of the seed, replicate `r` from stream
//! `r + 1`, and automatic entry picking from the last stream, so every
//! replicate can be reproduced on its own.

use crate::edge::{EdgePair, PairSelection};
use crate::error::{AntacError, Result};
use crate::metrics::{compute_metrics, confusion, MetricReport};
use crate::numerics::{par_map, std_normal_quantile, RngStream};
use crate::pipeline::{fit, FitConfig};
use crate::simgen::{generate_truth, pairs_with_value, simulate_dataset, GroundTruth, ModelSpec};
use rand::Rng;

const PICK_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum TrackedEntries {
    /// One random pair for each listed true value.
    Auto(Vec<f64>),
    Pairs(Vec<EdgePair>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StudyMode {
    /// Estimate only the tracked pairs.
    Tracked(TrackedEntries),
    /// Estimate every pair and score the recovered support.
    FullSupport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub spec: ModelSpec,
    pub replicates: usize,
    pub mode: StudyMode,
    /// `pairs` and `parallelism` are set per replicate by the study.
    pub fit: FitConfig,
    pub parallelism: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedSummary {
    pub pair: EdgePair,
    pub true_value: f64,
    pub mean: f64,
    pub sd: f64,
    /// Share of replicates whose 95% interval `ω̂ ± z·se` covers the truth.
    pub coverage: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub name: &'static str,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// Replicates where the metric was defined.
    pub defined: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedValue {
    pub pair: EdgePair,
    pub estimate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateOutcome {
    Tracked(Vec<TrackedValue>),
    Support(MetricReport),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub truth: GroundTruth,
    pub tracked: Vec<TrackedSummary>,
    pub metrics: Vec<MetricSummary>,
    pub outcomes: Vec<Result<ReplicateOutcome>>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
}

impl StudyReport {
    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_err()).count()
    }

    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

/// Pick one pair per requested value, uniformly among exact matches.
pub fn pick_tracked(truth: &GroundTruth, values: &[f64], seed: u64) -> Result<Vec<EdgePair>> {
    let mut rng = RngStream::new(seed, PICK_STREAM).rng();
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let candidates: Vec<EdgePair> = pairs_with_value(&truth.omega, v)
            .into_iter()
            .filter(|c| !out.contains(c))
            .collect();
        if candidates.is_empty() {
            return Err(AntacError::InvalidInput(format!(
                "no off-diagonal entry of Ω equals {v}"
            )));
        }
        out.push(candidates[rng.random_range(0..candidates.len())]);
    }
    Ok(out)
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        Some((xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    } else {
        None
    };
    (Some(mean), sd)
}

pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    if config.replicates == 0 {
        return Err(AntacError::InvalidInput(
            "replicates must be at least 1".into(),
        ));
    }
    let spec = &config.spec;
    let truth = generate_truth(spec, &mut RngStream::new(spec.seed, 0).rng())?;

    let tracked_pairs = match &config.mode {
        StudyMode::Tracked(TrackedEntries::Auto(values)) => {
            Some(pick_tracked(&truth, values, spec.seed)?)
        }
        StudyMode::Tracked(TrackedEntries::Pairs(pairs)) => {
            for pr in pairs {
                EdgePair::new(pr.i, pr.j, spec.p)?;
            }
            Some(pairs.clone())
        }
        StudyMode::FullSupport => None,
    };

    // Parallelize across replicates when there are enough of them, otherwise inside each fit.
    let threads = config.parallelism.max(1);
    let (outer, inner) = if config.replicates >= threads {
        (threads, 1)
    } else {
        (1, threads)
    };
    let mut fit_cfg = config.fit.clone();
    fit_cfg.parallelism = inner;
    fit_cfg.pairs = match &tracked_pairs {
        Some(pairs) => PairSelection::List(pairs.clone()),
        None => PairSelection::All,
    };

    let indices: Vec<usize> = (0..config.replicates).collect();
    let results = par_map(
        &indices,
        outer,
        |&r| -> Result<(ReplicateOutcome, f64, f64)> {
            let mut rng = RngStream::new(spec.seed, r as u64 + 1).rng();
            let data = simulate_dataset(&truth, spec.n, &mut rng)?;
            let fitted = fit(&data, &fit_cfg)?;
            let est = &fitted.estimate;
            let outcome = match &tracked_pairs {
                Some(pairs) => {
                    let mut values = Vec::with_capacity(pairs.len());
                    for &pair in pairs {
                        let e = est.edge(pair).ok_or_else(|| {
                            let cause = est
                                .failures
                                .iter()
                                .find(|(p, _)| *p == pair)
                                .map(|(_, e)| e.clone())
                                .unwrap_or_else(|| {
                                    AntacError::InvalidInput("pair was skipped".into())
                                });
                            AntacError::Pair {
                                i: pair.i,
                                j: pair.j,
                                source: Box::new(cause),
                            }
                        })?;
                        values.push(TrackedValue {
                            pair,
                            estimate: e.omega_ij,
                            se: e.standard_error(est.n),
                        });
                    }
                    ReplicateOutcome::Tracked(values)
                }
                None => {
                    let c = confusion(&fitted.support, &truth.support)?;
                    ReplicateOutcome::Support(compute_metrics(&c, spec.p)?)
                }
            };
            Ok((outcome, fitted.lambda1.value, fitted.lambda2.value))
        },
    );

    let mut lambda1 = None;
    let mut lambda2 = None;
    let outcomes: Vec<Result<ReplicateOutcome>> = results
        .into_iter()
        .map(|r| {
            r.map(|(o, l1, l2)| {
                lambda1.get_or_insert(l1);
                lambda2.get_or_insert(l2);
                o
            })
        })
        .collect();

    let z975 = std_normal_quantile(0.975)?;
    let tracked = match &tracked_pairs {
        Some(pairs) => pairs
            .iter()
            .enumerate()
            .map(|(k, &pair)| {
                let true_value = truth.omega[(pair.i, pair.j)];
                let vals: Vec<&TrackedValue> = outcomes
                    .iter()
                    .filter_map(|o| match o {
                        Ok(ReplicateOutcome::Tracked(v)) => Some(&v[k]),
                        _ => None,
                    })
                    .collect();
                let estimates: Vec<f64> = vals.iter().map(|v| v.estimate).collect();
                let (mean, sd) = mean_sd(&estimates);
                let covered = vals
                    .iter()
                    .filter(|v| (v.estimate - true_value).abs() <= z975 * v.se)
                    .count();
                TrackedSummary {
                    pair,
                    true_value,
                    mean: mean.unwrap_or(f64::NAN),
                    sd: sd.unwrap_or(f64::NAN),
                    coverage: if vals.is_empty() {
                        f64::NAN
                    } else {
                        covered as f64 / vals.len() as f64
                    },
                    count: vals.len(),
                }
            })
            .collect(),
        None => Vec::new(),
    };

    let metrics = if tracked_pairs.is_none() {
        MetricReport::NAMES
            .iter()
            .enumerate()
            .map(|(k, &name)| {
                let xs: Vec<f64> = outcomes
                    .iter()
                    .filter_map(|o| match o {
                        Ok(ReplicateOutcome::Support(r)) => r.values()[k],
                        _ => None,
                    })
                    .collect();
                let (mean, sd) = mean_sd(&xs);
                MetricSummary {
                    name,
                    mean,
                    sd,
                    defined: xs.len(),
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(StudyReport {
        truth,
        tracked,
        metrics,
        outcomes,
        lambda1,
        lambda2,
    })
}
