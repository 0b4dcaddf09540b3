use std::path::PathBuf;
use std::time::Instant;

use antac_core::numerics::RngStream;
use antac_core::simgen::{generate_truth, simulate_with_noise};

use crate::error::{exit, CliError, CliResult};
use crate::manifest::{write_runtime, Manifest};
use crate::options::ModelOptions;
use crate::table::{ensure_dir, numbered, write_matrix, write_text};

#[derive(Debug, Clone, clap::Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelOptions,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    /// Output directory; replicate r goes to `rep_<r>` inside it.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn replicate_dir_name(r: usize) -> String {
    format!("rep_{r:03}")
}

/// The truth uses stream 0 of the seed and replicate `r` (1-based) uses
/// stream `r`, matching the study driver.
pub fn run(args: &SimulateArgs) -> CliResult<i32> {
    let started = Instant::now();
    if args.replicates == 0 {
        return Err(CliError::input("replicates must be at least 1"));
    }
    let mut manifest = Manifest::new("simulate");
    let spec = args.model.resolve("override", &mut manifest)?;
    manifest.tunable("replicates", args.replicates, "override");
    let truth = generate_truth(&spec, &mut RngStream::new(spec.seed, 0).rng())?;

    let y_names = numbered("y", spec.p);
    let x_names = numbered("x", spec.q);
    let truth_support = truth.support.to_sign_matrix();
    manifest.set("truth.edges", truth.support.len());

    ensure_dir(&args.out)?;
    for r in 1..=args.replicates {
        let dir = args.out.join(replicate_dir_name(r));
        ensure_dir(&dir)?;
        let sim = simulate_with_noise(
            &truth,
            spec.n,
            &mut RngStream::new(spec.seed, r as u64).rng(),
        )?;
        if spec.q == 0 {
            write_text(&dir.join("X.csv"), "\n")?;
        } else {
            write_matrix(&dir.join("X.csv"), &x_names, sim.dataset.x())?;
        }
        write_matrix(&dir.join("Y.csv"), &y_names, sim.dataset.y())?;
        write_matrix(&dir.join("gamma_true.csv"), &x_names, &truth.gamma)?;
        write_matrix(&dir.join("omega_true.csv"), &y_names, &truth.omega)?;
        write_matrix(&dir.join("support_true.csv"), &y_names, &truth_support)?;
    }
    manifest.write(&args.out.join("manifest.txt"))?;
    write_runtime(&args.out, 1, started.elapsed())?;
    Ok(exit::OK)
}
