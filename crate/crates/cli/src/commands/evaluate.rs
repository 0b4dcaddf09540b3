use std::path::{Path, PathBuf};

use antac_core::metrics::{curve, CurveKind, EdgeStat, Sweep};
use antac_core::{compute_metrics, confusion, EdgePair, MetricReport, SupportMask};

use crate::error::{exit, CliError, CliResult};
use crate::manifest::Manifest;
use crate::table::{ensure_dir, fmt_f64, fmt_opt, parse_value, read_matrix, write_rows, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepKind {
    Pvalue,
    Xi0,
}

#[derive(Debug, Clone, clap::Args)]
pub struct EvaluateArgs {
    /// Edge table written by `antac fit`.
    #[arg(long)]
    pub edges: PathBuf,
    /// p×p matrix whose nonzero off-diagonal entries are the true edges.
    #[arg(long)]
    pub truth: PathBuf,
    /// Sweep the p-value cutoff or ξ₀ [default: pvalue].
    #[arg(long, value_enum)]
    pub sweep: Option<SweepKind>,
    /// Output directory [default: the directory holding the edge table].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Edge statistics plus the recorded selection, from an edge table.
pub fn read_edges(path: &Path, p: usize) -> CliResult<(Vec<EdgeStat>, SupportMask)> {
    let table = Table::read(path)?;
    let col = |name| table.column_index(name, path);
    let (ci, cj, cw, cp, cs) = (
        col("i")?,
        col("j")?,
        col("omega_ij")?,
        col("pvalue")?,
        col("selected")?,
    );
    let cse = col("se").ok();
    let mut stats = Vec::with_capacity(table.rows.len());
    let mut selected = SupportMask::new(p);
    for (r, row) in table.rows.iter().enumerate() {
        let value = |c: usize| parse_value(&row[c], r + 1, &table.header[c], path);
        let index = |c: usize| -> CliResult<usize> {
            let v = value(c)?;
            if v < 1.0 || v.fract() != 0.0 {
                return Err(CliError::input(format!(
                    "{}: row {}: '{}' is not a 1-based index",
                    path.display(),
                    r + 1,
                    row[c]
                )));
            }
            Ok(v as usize - 1)
        };
        let pair = EdgePair::new(index(ci)?, index(cj)?, p)?;
        let omega_ij = value(cw)?;
        let se = match cse {
            Some(c) => value(c)?,
            None => f64::NAN,
        };
        stats.push(EdgeStat {
            pair,
            omega_ij,
            se,
            p_value: value(cp)?,
        });
        match row[cs].as_str() {
            "1" => selected.insert(pair, if omega_ij >= 0.0 { 1 } else { -1 })?,
            "0" => {}
            other => {
                return Err(CliError::input(format!(
                    "{}: row {}: selected must be 0 or 1, got '{other}'",
                    path.display(),
                    r + 1
                )))
            }
        }
    }
    Ok((stats, selected))
}

pub fn read_truth(path: &Path) -> CliResult<SupportMask> {
    let m = read_matrix(path)?
        .1
        .ok_or_else(|| CliError::input(format!("{}: empty truth matrix", path.display())))?;
    if !m.is_square() {
        return Err(CliError::input(format!(
            "{}: truth must be square, got {}x{}",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(SupportMask::from_matrix(&m))
}

pub fn run(args: &EvaluateArgs) -> CliResult<i32> {
    let truth = read_truth(&args.truth)?;
    let p = truth.p();
    let (stats, selected) = read_edges(&args.edges, p)?;
    let counts = confusion(&selected, &truth)?;
    let report = compute_metrics(&counts, p)?;

    let out = match &args.out {
        Some(o) => o.clone(),
        None => args
            .edges
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    ensure_dir(&out)?;

    let mut rows: Vec<Vec<String>> = MetricReport::NAMES
        .iter()
        .zip(report.values())
        .map(|(name, v)| vec![name.to_string(), fmt_opt(v)])
        .collect();
    for (name, v) in [
        ("tp", counts.tp),
        ("tn", counts.tn),
        ("fp", counts.fp),
        ("fn", counts.fn_),
    ] {
        rows.push(vec![name.to_string(), v.to_string()]);
    }
    write_rows(&out.join("metrics.csv"), &["metric", "value"], &rows)?;

    let kind = args.sweep.unwrap_or(SweepKind::Pvalue);
    let sweep = match kind {
        SweepKind::Pvalue => Sweep::default_pvalue(),
        SweepKind::Xi0 => {
            if stats.iter().any(|s| s.se.is_nan()) {
                return Err(CliError::input(format!(
                    "{}: the xi0 sweep needs an se column",
                    args.edges.display()
                )));
            }
            Sweep::default_xi0()
        }
    };
    let roc = curve(&stats, &truth, &sweep, CurveKind::Roc)?;
    let pr = curve(&stats, &truth, &sweep, CurveKind::Pr)?;
    let curve_rows: Vec<Vec<String>> = roc
        .iter()
        .zip(&pr)
        .map(|(a, b)| {
            vec![
                fmt_f64(a.parameter),
                fmt_opt(a.sensitivity),
                fmt_opt(a.secondary),
                fmt_opt(b.secondary),
            ]
        })
        .collect();
    let param = match kind {
        SweepKind::Pvalue => "pvalue_cutoff",
        SweepKind::Xi0 => "xi0",
    };
    write_rows(
        &out.join("curve.csv"),
        &[param, "sensitivity", "one_minus_specificity", "precision"],
        &curve_rows,
    )?;

    let mut manifest = Manifest::new("evaluate");
    manifest.set("input.edges", args.edges.display());
    manifest.set("input.truth", args.truth.display());
    manifest.set("data.p", p);
    manifest.tunable(
        "sweep",
        param,
        if args.sweep.is_some() {
            "override"
        } else {
            "default"
        },
    );
    manifest.set("sweep.points", sweep.grid().len());
    manifest.write(&out.join("evaluate_manifest.txt"))?;
    Ok(exit::OK)
}
