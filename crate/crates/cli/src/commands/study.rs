use std::path::{Path, PathBuf};
use std::time::Instant;

use antac_core::pipeline::{resolve_lambda1, resolve_lambda2};
use antac_core::{run_study, StudyConfig, StudyMode, TrackedEntries};
use serde::Deserialize;

use crate::error::{exit, CliError, CliResult};
use crate::manifest::{write_runtime, Manifest};
use crate::options::{
    format_pairs, parse_pair_list, record_lambdas, resolve_threads, FitOptions, ModelOptions,
};
use crate::table::{ensure_dir, fmt_f64, fmt_opt, write_rows};

#[derive(Debug, Clone, clap::Args)]
pub struct StudyArgs {
    /// TOML file with [model], [study] and optional [fit] tables.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory [default: the directory holding the config].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "ANTAC_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub replicates: usize,
    /// `tracked` or `support`.
    pub mode: String,
    /// True values of Ω to follow; one matching entry is picked per value.
    pub track_values: Option<Vec<f64>>,
    /// Explicit 1-based pairs such as `"1-2,3-4"`.
    pub track_pairs: Option<String>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub model: ModelOptions,
    pub study: StudySection,
    #[serde(default)]
    pub fit: FitOptions,
}

impl StudyFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }
}

pub const STUDY_COLUMNS: [&str; 9] = [
    "kind",
    "name",
    "i",
    "j",
    "true_value",
    "mean",
    "sd",
    "coverage",
    "count",
];

fn mode_from(section: &StudySection, p: usize) -> CliResult<StudyMode> {
    match section.mode.as_str() {
        "support" => {
            if section.track_values.is_some() || section.track_pairs.is_some() {
                return Err(CliError::input(
                    "track_values and track_pairs need mode = \"tracked\"",
                ));
            }
            Ok(StudyMode::FullSupport)
        }
        "tracked" => match (&section.track_values, &section.track_pairs) {
            (Some(v), None) if !v.is_empty() => {
                Ok(StudyMode::Tracked(TrackedEntries::Auto(v.clone())))
            }
            (None, Some(s)) => Ok(StudyMode::Tracked(TrackedEntries::Pairs(parse_pair_list(
                s, p,
            )?))),
            _ => Err(CliError::input(
                "mode = \"tracked\" needs exactly one of a non-empty track_values or track_pairs",
            )),
        },
        other => Err(CliError::input(format!(
            "unknown study mode '{other}' (expected tracked or support)"
        ))),
    }
}

pub fn run(args: &StudyArgs) -> CliResult<i32> {
    let started = Instant::now();
    let file = StudyFile::read(&args.config)?;
    let threads = resolve_threads(args.threads, file.study.threads)?;

    let mut manifest = Manifest::new("study");
    manifest.set("input.config", args.config.display());
    let spec = file.model.resolve("config", &mut manifest)?;
    let fit_cfg = file.fit.resolve("config", &mut manifest)?;
    let mode = mode_from(&file.study, spec.p)?;
    manifest.tunable("replicates", file.study.replicates, "config");
    manifest.tunable("study.mode", &file.study.mode, "config");
    if let Some(v) = &file.study.track_values {
        let vs: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
        manifest.tunable("study.track_values", vs.join(";"), "config");
    }

    let l1 = resolve_lambda1(spec.n, spec.p, spec.q, &fit_cfg)?;
    let l2 = resolve_lambda2(spec.n, spec.p, &fit_cfg)?;
    record_lambdas(&mut manifest, "config", &l1, &l2);

    let config = StudyConfig {
        spec,
        replicates: file.study.replicates,
        mode,
        fit: fit_cfg,
        parallelism: threads,
    };
    let report = run_study(&config)?;

    let mut rows = Vec::new();
    for t in &report.tracked {
        rows.push(vec![
            "tracked".into(),
            "omega_ij".into(),
            (t.pair.i + 1).to_string(),
            (t.pair.j + 1).to_string(),
            fmt_f64(t.true_value),
            fmt_f64(t.mean),
            fmt_f64(t.sd),
            fmt_f64(t.coverage),
            t.count.to_string(),
        ]);
    }
    for m in &report.metrics {
        rows.push(vec![
            "metric".into(),
            m.name.into(),
            "NA".into(),
            "NA".into(),
            "NA".into(),
            fmt_opt(m.mean),
            fmt_opt(m.sd),
            "NA".into(),
            m.defined.to_string(),
        ]);
    }
    let failures = report.failures();
    rows.push(vec![
        "summary".into(),
        "failed_replicates".into(),
        "NA".into(),
        "NA".into(),
        "NA".into(),
        "NA".into(),
        "NA".into(),
        "NA".into(),
        failures.to_string(),
    ]);
    if !report.tracked.is_empty() {
        let pairs: Vec<_> = report.tracked.iter().map(|t| t.pair).collect();
        manifest.set("study.tracked_pairs", format_pairs(&pairs));
    }
    manifest.set("truth.edges", report.truth.support.len());
    manifest.set("replicates.failed", failures);
    for (r, o) in report.outcomes.iter().enumerate() {
        if let Err(e) = o {
            eprintln!("antac: replicate {} failed: {e}", r + 1);
        }
    }
    let ok = report.outcomes.len() - failures;
    manifest.set(
        "status",
        if failures == 0 {
            "ok"
        } else if ok == 0 {
            "failed"
        } else {
            "partial"
        },
    );

    let out = match &args.out {
        Some(o) => o.clone(),
        None => args
            .config
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    ensure_dir(&out)?;
    write_rows(&out.join("study.csv"), &STUDY_COLUMNS, &rows)?;
    manifest.write(&out.join("manifest.txt"))?;
    write_runtime(&out, threads, started.elapsed())?;

    if ok == 0 {
        return Err(CliError::Numerical("every replicate failed".into()));
    }
    Ok(if failures == 0 {
        exit::OK
    } else {
        exit::PARTIAL
    })
}
