use std::path::{Path, PathBuf};
use std::time::Instant;

use antac_core::pipeline::{fit, FitResult};
use antac_core::{Dataset, Matrix};

use crate::error::{exit, CliError, CliResult};
use crate::manifest::{write_runtime, Manifest};
use crate::options::{parse_edges, record_lambdas, resolve_threads, FitOptions};
use crate::table::{ensure_dir, fmt_f64, numbered, read_matrix, write_matrix, write_rows};

#[derive(Debug, Clone, clap::Args)]
pub struct FitArgs {
    /// Covariates, n rows by q columns. Omit (or pass a file with an empty
    /// header) to skip the adjustment step.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Responses, n rows by p columns.
    #[arg(long)]
    pub y: PathBuf,
    /// Output directory, created if needed.
    #[arg(long)]
    pub out: PathBuf,
    /// `all`, a list such as `1-2,1-3`, or a CSV with 1-based i,j columns.
    #[arg(long, default_value = "all")]
    pub edges: String,
    #[command(flatten)]
    pub options: FitOptions,
    #[arg(long, env = "ANTAC_THREADS")]
    pub threads: Option<usize>,
}

pub const EDGE_COLUMNS: [&str; 11] = [
    "i",
    "j",
    "omega_ij",
    "omega_ii",
    "omega_jj",
    "se",
    "z",
    "pvalue",
    "qvalue",
    "partial_corr",
    "selected",
];

/// Load `(X, Y)` and the response names.
pub fn load_dataset(x: Option<&Path>, y: &Path) -> CliResult<(Dataset, Vec<String>)> {
    let (names, y_mat) = read_matrix(y)?;
    let y_mat =
        y_mat.ok_or_else(|| CliError::input(format!("{}: no response columns", y.display())))?;
    if y_mat.rows() == 0 {
        return Err(CliError::input(format!("{}: no data rows", y.display())));
    }
    let x_mat = match x {
        Some(path) => read_matrix(path)?.1,
        None => None,
    };
    let data = match x_mat {
        None => Dataset::responses_only(y_mat)?,
        Some(x_mat) if x_mat.cols() == 0 => Dataset::responses_only(y_mat)?,
        Some(x_mat) => {
            if x_mat.rows() != y_mat.rows() {
                return Err(CliError::input(format!(
                    "X has {} rows but Y has {}",
                    x_mat.rows(),
                    y_mat.rows()
                )));
            }
            Dataset::new(x_mat, y_mat)?
        }
    };
    Ok((data, names))
}

/// Assembled estimate with unselected off-diagonal entries set to zero.
pub fn selected_matrix(result: &FitResult) -> Matrix {
    let mut m = result.estimate.assembled.clone();
    for e in &result.estimate.edges {
        if !result.support.contains(&e.pair) {
            m[(e.pair.i, e.pair.j)] = 0.0;
            m[(e.pair.j, e.pair.i)] = 0.0;
        }
    }
    m
}

pub fn edge_rows(result: &FitResult) -> Vec<Vec<String>> {
    let n = result.estimate.n;
    result
        .estimate
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| {
            vec![
                (e.pair.i + 1).to_string(),
                (e.pair.j + 1).to_string(),
                fmt_f64(e.omega_ij),
                fmt_f64(e.omega_ii),
                fmt_f64(e.omega_jj),
                fmt_f64(e.standard_error(n)),
                fmt_f64(e.z_score),
                fmt_f64(e.p_value),
                fmt_f64(result.q_values[k]),
                fmt_f64(e.partial_corr),
                u8::from(result.selected(k)).to_string(),
            ]
        })
        .collect()
}

fn failure_rows(result: &FitResult) -> Vec<Vec<String>> {
    let clean = |s: String| s.replace([',', '\n'], ";");
    let mut rows: Vec<Vec<String>> = result
        .adjustment
        .failures
        .iter()
        .map(|(c, e)| {
            vec![
                "column".into(),
                (c + 1).to_string(),
                "NA".into(),
                clean(e.to_string()),
            ]
        })
        .collect();
    rows.extend(result.estimate.failures.iter().map(|(pr, e)| {
        vec![
            "pair".into(),
            (pr.i + 1).to_string(),
            (pr.j + 1).to_string(),
            clean(e.to_string()),
        ]
    }));
    rows.extend(result.estimate.skipped.iter().map(|pr| {
        vec![
            "skipped".into(),
            (pr.i + 1).to_string(),
            (pr.j + 1).to_string(),
            "touches a failed column".into(),
        ]
    }));
    rows
}

pub fn run(args: &FitArgs) -> CliResult<i32> {
    let started = Instant::now();
    let threads = resolve_threads(args.threads, None)?;
    let (data, names) = load_dataset(args.x.as_deref(), &args.y)?;
    let (n, p, q) = (data.n(), data.p(), data.q());

    let mut manifest = Manifest::new("fit");
    manifest.set(
        "input.x",
        args.x
            .as_ref()
            .map_or("none".into(), |x| x.display().to_string()),
    );
    manifest.set("input.y", args.y.display());
    manifest.set("data.n", n);
    manifest.set("data.p", p);
    manifest.set("data.q", q);
    let mut cfg = args.options.resolve("override", &mut manifest)?;
    cfg.pairs = parse_edges(&args.edges, p)?;
    cfg.parallelism = threads;
    manifest.tunable(
        "edges",
        &args.edges,
        if args.edges == "all" {
            "default"
        } else {
            "override"
        },
    );

    let result = fit(&data, &cfg)?;
    record_lambdas(&mut manifest, "override", &result.lambda1, &result.lambda2);

    let est = &result.estimate;
    manifest.set("edges.requested", est.requested());
    manifest.set("edges.estimated", est.edges.len());
    manifest.set("edges.failed", est.failures.len());
    manifest.set("edges.skipped", est.skipped.len());
    manifest.set("edges.selected", result.support.len());
    manifest.set("columns.failed", result.adjustment.failures.len());
    manifest.set("diagonal.source", "pair_average");
    let partial = result.has_failures();
    manifest.set("status", if partial { "partial" } else { "ok" });

    ensure_dir(&args.out)?;
    write_rows(
        &args.out.join("edges.csv"),
        &EDGE_COLUMNS,
        &edge_rows(&result),
    )?;
    let names = if names.len() == p {
        names
    } else {
        numbered("y", p)
    };
    write_matrix(&args.out.join("omega_hat.csv"), &names, &est.assembled)?;
    write_matrix(
        &args.out.join("omega_thresholded.csv"),
        &names,
        &selected_matrix(&result),
    )?;
    if partial {
        let rows = failure_rows(&result);
        for r in &rows {
            eprintln!("antac: {} {}-{} failed: {}", r[0], r[1], r[2], r[3]);
        }
        write_rows(
            &args.out.join("failures.csv"),
            &["kind", "i", "j", "reason"],
            &rows,
        )?;
    }
    manifest.write(&args.out.join("manifest.txt"))?;
    write_runtime(&args.out, threads, started.elapsed())?;

    if est.edges.is_empty() && est.requested() > 0 {
        return Err(CliError::Numerical("every pair failed".into()));
    }
    Ok(if partial { exit::PARTIAL } else { exit::OK })
}
