//! Support-recovery scores and ROC / precision-recall sweeps.
//!
//! Counts run over unordered off-diagonal pairs. Every rate is a ratio whose
//! numerator and denominator both halve relative to ordered counting, so the
//! values agree with the ordered-pair definitions. Ratios with a zero
//! denominator are reported as `None` rather than 0.

use crate::edge::{EdgeEstimate, EdgePair};
use crate::error::{AntacError, Result};
use crate::inference::SupportMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(estimated: &SupportMask, truth: &SupportMask) -> Result<ConfusionCounts> {
    if estimated.p() != truth.p() {
        return Err(AntacError::DimensionMismatch(format!(
            "estimate has p = {}, truth has p = {}",
            estimated.p(),
            truth.p()
        )));
    }
    let p = truth.p() as u64;
    let total = p * p.saturating_sub(1) / 2;
    let tp = estimated.pairs().filter(|e| truth.contains(e)).count() as u64;
    let fp = estimated.len() as u64 - tp;
    let fn_ = truth.len() as u64 - tp;
    Ok(ConfusionCounts {
        tp,
        tn: total - tp - fp - fn_,
        fp,
        fn_,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricReport {
    pub misr: Option<f64>,
    pub spe: Option<f64>,
    pub sen: Option<f64>,
    pub pre: Option<f64>,
    pub mcc: Option<f64>,
}

impl MetricReport {
    pub const NAMES: [&'static str; 5] = ["misr", "spe", "sen", "pre", "mcc"];

    pub fn values(&self) -> [Option<f64>; 5] {
        [self.misr, self.spe, self.sen, self.pre, self.mcc]
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

pub fn compute_metrics(c: &ConfusionCounts, p: usize) -> Result<MetricReport> {
    let pairs = (p as u64) * (p as u64).saturating_sub(1) / 2;
    if c.total() != pairs {
        return Err(AntacError::DimensionMismatch(format!(
            "counts sum to {} but p = {p} has {pairs} pairs",
            c.total()
        )));
    }
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let mcc_den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    Ok(MetricReport {
        misr: ratio(fn_ + fp, pairs as f64),
        spe: ratio(tn, tn + fp),
        sen: ratio(tp, tp + fn_),
        pre: ratio(tp, tp + fp),
        mcc: ratio(tp * tn - fp * fn_, mcc_den.sqrt()),
    })
}

/// Per-edge quantities needed by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeStat {
    pub pair: EdgePair,
    pub omega_ij: f64,
    /// `√((ω̂ᵢᵢω̂ⱼⱼ + ω̂ᵢⱼ²)/n)`.
    pub se: f64,
    pub p_value: f64,
}

impl EdgeStat {
    pub fn from_estimate(e: &EdgeEstimate, n: usize) -> Self {
        EdgeStat {
            pair: e.pair,
            omega_ij: e.omega_ij,
            se: e.standard_error(n),
            p_value: e.p_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// ANTAC thresholds `τ = se·√(2ξ₀ log p)` for each ξ₀.
    Xi0(Vec<f64>),
    /// Select edges with p-value strictly below each cutoff.
    PValue(Vec<f64>),
}

impl Sweep {
    pub fn grid(&self) -> &[f64] {
        match self {
            Sweep::Xi0(g) | Sweep::PValue(g) => g,
        }
    }

    /// `count` points log-spaced on `[lo, hi]`.
    pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        if count == 1 {
            return vec![lo];
        }
        let (a, b) = (lo.ln(), hi.ln());
        (0..count)
            .map(|k| match k {
                0 => lo,
                k if k == count - 1 => hi,
                k => (a + (b - a) * k as f64 / (count - 1) as f64).exp(),
            })
            .collect()
    }

    pub fn default_xi0() -> Sweep {
        Sweep::Xi0(Sweep::log_grid(0.1, 50.0, 50))
    }

    pub fn default_pvalue() -> Sweep {
        Sweep::PValue(Sweep::log_grid(1e-12, 1.0, 50))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Roc,
    Pr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub parameter: f64,
    pub sensitivity: Option<f64>,
    /// `1 − specificity` for ROC, precision for PR.
    pub secondary: Option<f64>,
}

pub fn select_by_threshold(edges: &[EdgeStat], p: usize, xi0: f64) -> SupportMask {
    let factor = (2.0 * xi0 * (p as f64).ln()).sqrt();
    let mut mask = SupportMask::new(p);
    for e in edges {
        if e.omega_ij != 0.0 && e.omega_ij.abs() >= e.se * factor {
            mask.insert(e.pair, if e.omega_ij > 0.0 { 1 } else { -1 })
                .expect("valid pair");
        }
    }
    mask
}

pub fn select_by_pvalue(edges: &[EdgeStat], p: usize, cutoff: f64) -> SupportMask {
    let mut mask = SupportMask::new(p);
    for e in edges {
        if e.omega_ij != 0.0 && e.p_value < cutoff {
            mask.insert(e.pair, if e.omega_ij > 0.0 { 1 } else { -1 })
                .expect("valid pair");
        }
    }
    mask
}

pub fn curve(
    edges: &[EdgeStat],
    truth: &SupportMask,
    sweep: &Sweep,
    kind: CurveKind,
) -> Result<Vec<CurvePoint>> {
    let grid = sweep.grid();
    if grid.is_empty() {
        return Err(AntacError::InvalidInput("sweep grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(AntacError::InvalidInput("sweep grid must be sorted".into()));
    }
    let p = truth.p();
    grid.iter()
        .map(|&param| {
            let mask = match sweep {
                Sweep::Xi0(_) => select_by_threshold(edges, p, param),
                Sweep::PValue(_) => select_by_pvalue(edges, p, param),
            };
            let report = compute_metrics(&confusion(&mask, truth)?, p)?;
            let secondary = match kind {
                CurveKind::Roc => report.spe.map(|s| 1.0 - s),
                CurveKind::Pr => report.pre,
            };
            Ok(CurvePoint {
                parameter: param,
                sensitivity: report.sen,
                secondary,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(p: usize, pairs: &[(usize, usize)]) -> SupportMask {
        let mut m = SupportMask::new(p);
        for &(i, j) in pairs {
            m.insert(EdgePair { i, j }, 1).unwrap();
        }
        m
    }

    #[test]
    fn enumerated_confusion() {
        let truth = mask(4, &[(0, 1), (2, 3)]);
        let est = mask(4, &[(0, 1), (1, 2)]);
        let c = confusion(&est, &truth).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                tn: 3,
                fp: 1,
                fn_: 1
            }
        );
        assert!(confusion(&mask(5, &[]), &truth).is_err());
    }

    #[test]
    fn perfect_and_empty_estimates() {
        let truth = mask(5, &[(0, 1), (2, 4)]);
        let c = confusion(&truth, &truth).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        let r = compute_metrics(&c, 5).unwrap();
        assert_eq!(r.misr, Some(0.0));
        assert_eq!(
            (r.spe, r.sen, r.pre, r.mcc),
            (Some(1.0), Some(1.0), Some(1.0), Some(1.0))
        );

        let c = confusion(&mask(5, &[]), &truth).unwrap();
        assert_eq!((c.tp, c.fn_), (0, 2));
        let r = compute_metrics(&c, 5).unwrap();
        assert_eq!(r.sen, Some(0.0));
        assert_eq!(r.pre, None);
        assert_eq!(r.mcc, None);
    }

    #[test]
    fn formula_arithmetic() {
        // p = 5 gives 10 pairs.
        let c = ConfusionCounts {
            tp: 3,
            fp: 1,
            fn_: 2,
            tn: 4,
        };
        let r = compute_metrics(&c, 5).unwrap();
        assert_eq!(r.pre, Some(0.75));
        assert_eq!(r.sen, Some(0.6));
        assert_eq!(r.spe, Some(0.8));
        assert!((r.mcc.unwrap() - 10.0 / 600f64.sqrt()).abs() <= 1e-12);
        assert_eq!(r.misr, Some(0.3));
        assert!(compute_metrics(&c, 6).is_err());
    }

    #[test]
    fn pvalue_sweep_edges() {
        let truth = mask(3, &[(0, 1)]);
        let edges = vec![
            EdgeStat {
                pair: EdgePair { i: 0, j: 1 },
                omega_ij: 0.5,
                se: 0.1,
                p_value: 1e-6,
            },
            EdgeStat {
                pair: EdgePair { i: 0, j: 2 },
                omega_ij: 0.01,
                se: 0.1,
                p_value: 0.9,
            },
            EdgeStat {
                pair: EdgePair { i: 1, j: 2 },
                omega_ij: -0.02,
                se: 0.1,
                p_value: 0.8,
            },
        ];
        let pts = curve(
            &edges,
            &truth,
            &Sweep::PValue(vec![0.0, 0.5, 1.0]),
            CurveKind::Roc,
        )
        .unwrap();
        assert_eq!(pts[0].sensitivity, Some(0.0));
        assert_eq!(pts[2].sensitivity, Some(1.0));
        assert_eq!(pts[2].secondary, Some(1.0));
        assert_eq!(pts[1].secondary, Some(0.0));
        assert!(curve(&edges, &truth, &Sweep::PValue(vec![]), CurveKind::Roc).is_err());
        assert!(curve(
            &edges,
            &truth,
            &Sweep::PValue(vec![0.5, 0.1]),
            CurveKind::Pr
        )
        .is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = Sweep::log_grid(0.1, 50.0, 50);
        assert_eq!(g.len(), 50);
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[49] - 50.0).abs() < 1e-12);
    }
}
