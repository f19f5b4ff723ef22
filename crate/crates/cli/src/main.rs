//! `cdd`: synthetic shapes, loss evaluation, gradient-weight curves,
//! distillation and free-point training from the command line.

mod commands;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use cdd_core::{Approx, Init, LossSpec, Optimizer, ReferenceSource, ShapeKind, WeightingFunction, WeightingKind};
use clap::{Args, Parser, Subcommand};

use crate::output::Outputs;
use crate::parse::GridSource;

#[derive(Debug, Parser)]
#[command(name = "cdd", version, about = "Weighted Chamfer distance experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic shape, optionally with a cropped partial view.
    Gen(GenArgs),
    /// Print `l1cd,l2cd,f1` for a prediction against ground truth.
    Eval(EvalArgs),
    /// Tabulate gradient-weight curves of hyperbolic CD and weighted CDs.
    Curves(CurvesArgs),
    /// Grid-search one weighting family against hyperbolic CD.
    Distill(DistillArgs),
    /// Fit a free-point model to a ground-truth cloud.
    Train(TrainArgs),
    /// Snapshot-by-snapshot distance between two training runs.
    Compare(CompareArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub shape: ShapeKind,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Crop direction; kept points have the smallest projection on it.
    #[arg(long, value_parser = parse::point3, requires = "keep")]
    pub crop_dir: Option<[f64; 3]>,
    /// Fraction of points kept by the crop, in (0, 1].
    #[arg(long, value_parser = parse::keep_ratio)]
    pub keep: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = 0.01, value_parser = parse::positive)]
    pub tau: f64,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long, default_value_t = 1.0, value_parser = parse::positive)]
    pub alpha: f64,
    /// `KIND[:name=value,...]` entries separated by commas.
    #[arg(long, required = true, value_parser = parse::distribution_list)]
    pub dist: Vec<Vec<WeightingFunction>>,
    #[arg(long, default_value = "dominant")]
    pub approx: Approx,
    #[arg(long, default_value_t = 1e-4, value_parser = parse::positive)]
    pub delta: f64,
    /// Divide every column by its maximum.
    #[arg(long)]
    pub rescale: bool,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    #[arg(long)]
    pub dist: WeightingKind,
    #[arg(long, default_value_t = 1.0, value_parser = parse::positive)]
    pub alpha: f64,
    #[arg(long, default_value = "dominant")]
    pub approx: Approx,
    #[arg(long, default_value_t = 1e-4, value_parser = parse::positive)]
    pub delta: f64,
    /// `uniform`, `expdecay:RATE`, `file:PATH` or `selfgen`.
    #[arg(long = "ref", default_value = "expdecay:300", value_parser = parse::reference_source)]
    pub reference: ReferenceSource,
    /// `default` or `file:PATH`.
    #[arg(long, default_value = "default", value_parser = parse::grid_source)]
    pub grid: GridSource,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub partial: PathBuf,
    /// `cd_l1`, `cd_l2`, `hypercd[:alpha=A]` or `weighted:KIND[:params]`.
    #[arg(long)]
    pub loss: LossSpec,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.01, value_parser = parse::positive)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write `snap_<iter>.xyz` every N iterations, plus the first and last.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub snapshots: Option<u64>,
    #[arg(long, default_value = "adam")]
    pub optimizer: Optimizer,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub eval_every: u64,
    /// Number of predicted points; defaults to the ground-truth size.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub output_size: Option<u64>,
    /// `jitter[:SIGMA]`, `uniform_box` or `copy_partial`.
    #[arg(long, default_value = "jitter")]
    pub init: Init,
    #[arg(long, default_value_t = 0.01, value_parser = parse::positive)]
    pub tau: f64,
    /// Evaluate weighted losses at `d` instead of `mode + d`.
    #[arg(long)]
    pub no_mode_shift: bool,
    /// Record wall-clock time in the log; the log is then not reproducible.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub run_a: PathBuf,
    #[arg(long)]
    pub run_b: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

/// A semantic flag error detected after parsing; exits like a clap error.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("CDD_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("CDD_THREADS must be a non-negative integer, got '{value}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let mut outputs = Outputs::default();
    let result = configure_threads().and_then(|()| commands::run(cli.command, &argv, &mut outputs));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            outputs.remove_all();
            if let Some(usage) = err.downcast_ref::<UsageError>() {
                eprintln!("error: {usage}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {err:#}");
                ExitCode::FAILURE
            }
        }
    }
}
