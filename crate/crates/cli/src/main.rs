use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use spcafs::data::{generate_synthetic, save_csv, NormalizeMode, SyntheticSidecar, SyntheticSpec};
use spcafs_cli::bench::{self, BenchPlan};
use spcafs_cli::options::{OneOrMany, Settings};
use spcafs_cli::report::to_json_pretty;
use spcafs_cli::{select, sweep, trace, CliError, Result};

#[derive(Parser)]
#[command(
    name = "spcafs",
    version,
    about = "Unsupervised feature selection by sparse PCA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit once and keep the top-h features.
    Select {
        #[command(flatten)]
        common: Common,
        /// Also write the input restricted to the selected columns as CSV.
        #[arg(long)]
        reduced: Option<PathBuf>,
    },
    /// Grid over gamma and h, scored by repeated k-means, with baselines.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Flat CSV table (default: the --out path with a .csv extension).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Objective value per iteration for one fit.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Iteration/objective CSV (default: the --out path with a .csv extension).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Timing scaling in the number of samples on synthetic data.
    Bench(BenchArgs),
    /// Write a planted-features dataset as CSV plus a JSON sidecar.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct Common {
    /// Input CSV, one sample per row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Ground-truth labels: sidecar JSON or one label per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Column of the input CSV holding labels (index or header name).
    #[arg(long)]
    label_column: Option<String>,
    /// The input CSV starts with a header row.
    #[arg(long)]
    header: bool,
    #[arg(long, value_parser = clap::value_parser!(NormalizeMode))]
    normalize: Option<NormalizeMode>,
    /// Sparsity weight; a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// Exponent of the row-sparsity norm, in (0, 1].
    #[arg(long)]
    p: Option<f64>,
    /// Reduced dimension (default: number of classes minus one).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of features to keep; a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    h: Vec<usize>,
    /// k-means restarts per evaluated selection.
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Relative objective change that stops the solver.
    #[arg(long)]
    tol: Option<f64>,
    /// JSON report path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0: one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// JSON file of defaults; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let flags = Settings {
            input: self.input.clone(),
            labels: self.labels.clone(),
            label_column: self.label_column.clone(),
            header: self.header.then_some(true),
            normalize: self.normalize,
            gamma: (!self.gamma.is_empty()).then(|| OneOrMany::Many(self.gamma.clone())),
            p: self.p,
            m: self.m,
            eps: self.epsilon,
            h: (!self.h.is_empty()).then(|| OneOrMany::Many(self.h.clone())),
            repeats: self.repeats,
            base_seed: self.seed,
            max_iters: self.max_iters,
            rel_tol: self.tol,
            workers: self.workers,
        };
        Ok(match &self.config {
            Some(path) => flags.over(Settings::from_file(path)?),
            None => flags,
        })
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Ascending sample counts.
    #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_N_LIST)]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = bench::DEFAULT_D)]
    d: usize,
    /// Timing repetitions per size; the minimum is kept.
    #[arg(long, default_value_t = bench::DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest acceptable fitted exponent.
    #[arg(long, default_value_t = bench::DEFAULT_MAX_ALPHA)]
    max_alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    d_informative: usize,
    #[arg(long, default_value_t = 40)]
    d_noise: usize,
    /// Number of clusters.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Minimum distance between cluster centers.
    #[arg(long, default_value_t = 6.0)]
    sep: f64,
    #[arg(long, default_value_t = 1.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(CliError::from),
    }
}

fn csv_path(explicit: &Option<PathBuf>, out: &Option<PathBuf>) -> Option<PathBuf> {
    explicit
        .clone()
        .or_else(|| out.as_ref().map(|o| o.with_extension("csv")))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
{
    let file =
        fs::File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut w = io::BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Returns the exit code for a run that completed but failed a check.
fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Select { common, reduced } => {
            let s = common.settings()?;
            let dataset = s.load_dataset()?;
            let cfg = s.solver_config(&dataset)?;
            let h = s.single_h()?;
            let (report, reduced_x) = select::run_select(&dataset, s.normalize_mode(), &cfg, h)?;
            write_text(common.out.as_deref(), &to_json_pretty(&report))?;
            if let Some(path) = reduced {
                let names = dataset.feature_names.as_ref().map(|n| {
                    report
                        .features
                        .iter()
                        .map(|&f| n[f].clone())
                        .collect::<Vec<_>>()
                });
                save_csv(&reduced_x, names.as_deref(), &path)?;
            }
            Ok(0)
        }
        Command::Sweep { common, csv } => {
            let s = common.settings()?;
            let dataset = s.load_dataset()?;
            let report = sweep::run_sweep(&dataset, &s.experiment_plan())?;
            write_text(common.out.as_deref(), &to_json_pretty(&report))?;
            if let Some(path) = csv_path(&csv, &common.out) {
                write_with(&path, |w| sweep::write_csv(&report, w))?;
            }
            if report.failures > 0 {
                error!("{} of {} cells failed", report.failures, report.cells.len());
                return Ok(4);
            }
            Ok(0)
        }
        Command::Trace { common, csv } => {
            let s = common.settings()?;
            let dataset = s.load_dataset()?;
            let cfg = s.solver_config(&dataset)?;
            let report = trace::run_convergence(&dataset, s.normalize_mode(), &cfg)?;
            write_text(common.out.as_deref(), &to_json_pretty(&report))?;
            if let Some(path) = csv_path(&csv, &common.out) {
                write_with(&path, |w| trace::write_csv(&report, w))?;
            }
            if !report.monotone {
                error!("objective trace increased between iterations");
                return Ok(4);
            }
            Ok(0)
        }
        Command::Bench(args) => {
            let plan = BenchPlan {
                n_list: args.n_list,
                d: args.d,
                trials: args.trials,
                gamma: args.gamma,
                m: args.m,
                seed: args.seed,
                max_alpha: args.max_alpha,
            };
            let report = bench::run_benchmark(&plan)?;
            write_text(args.out.as_deref(), &to_json_pretty(&report))?;
            match report.timing.passed {
                Some(false) => {
                    error!(
                        "fitted exponent above {} (scatter {:?}, total {:?})",
                        plan.max_alpha, report.timing.alpha_scatter, report.timing.alpha_total
                    );
                    Ok(4)
                }
                Some(true) => Ok(0),
                None => {
                    warn!("fewer than two sizes; no exponent fitted");
                    Ok(0)
                }
            }
        }
        Command::Generate(args) => {
            let spec = SyntheticSpec {
                n: args.n,
                d_informative: args.d_informative,
                d_noise: args.d_noise,
                k: args.k,
                cluster_sep: args.sep,
                noise_sigma: args.noise_sigma,
                seed: args.seed,
            };
            let data = generate_synthetic(&spec)?;
            save_csv(&data.dataset.x, None, &args.out)?;
            let sidecar = SyntheticSidecar {
                seed: spec.seed,
                spec,
                labels: data
                    .dataset
                    .labels
                    .as_ref()
                    .map(|l| l.labels.clone())
                    .unwrap_or_default(),
                informative: data.informative,
            };
            let sidecar_path = args.out.with_extension("json");
            write_text(Some(&sidecar_path), &to_json_pretty(&sidecar))?;
            info!(
                "wrote {} and {}",
                args.out.display(),
                sidecar_path.display()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
