//! `bench`: wall-clock scaling in the sample count at fixed dimension.

use std::time::Instant;

use log::warn;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use spcafs::data::{generate_synthetic, SyntheticSpec};
use spcafs::linalg::scatter_matrix;
use spcafs::solver::{fit_scatter, update_g, update_w, SolverConfig};

use crate::seeds::{derive_seed, BENCH_DATA};
use crate::{CliError, Result, SCHEMA_VERSION};

pub const DEFAULT_N_LIST: [usize; 4] = [1000, 2000, 4000, 8000];
pub const DEFAULT_D: usize = 200;
pub const DEFAULT_TRIALS: usize = 3;
pub const DEFAULT_MAX_ALPHA: f64 = 1.3;
const MIN_RELIABLE_SECS: f64 = 0.010;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub n_list: Vec<usize>,
    pub d: usize,
    pub trials: usize,
    pub gamma: f64,
    pub m: usize,
    pub seed: u64,
    pub max_alpha: f64,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            n_list: DEFAULT_N_LIST.to_vec(),
            d: DEFAULT_D,
            trials: DEFAULT_TRIALS,
            gamma: 1.0,
            m: 3,
            seed: 0,
            max_alpha: DEFAULT_MAX_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub d: usize,
    pub data_seed: u64,
    pub fit_iterations: usize,
    pub timing: BenchTiming,
}

/// Minimum over trials of each phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTiming {
    pub scatter_secs: f64,
    /// One `W` update followed by one `G` update.
    pub iteration_secs: f64,
    /// Complete solver run on a prebuilt scatter matrix.
    pub fit_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: u32,
    pub command: String,
    pub plan: BenchPlan,
    pub rows: Vec<BenchRow>,
    /// Everything derived from wall-clock measurements.
    pub timing: BenchSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    /// Absent with fewer than two sizes.
    pub alpha_scatter: Option<f64>,
    /// Exponent of scatter construction plus one iteration.
    pub alpha_total: Option<f64>,
    pub passed: Option<bool>,
    pub warnings: Vec<String>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn power_law_exponent(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

pub fn run_benchmark(plan: &BenchPlan) -> Result<BenchReport> {
    if plan.n_list.is_empty() {
        return Err(CliError::Config("n-list is empty".into()));
    }
    if plan.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config("n-list must be strictly ascending".into()));
    }
    if plan.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    if plan.d < 2 {
        return Err(CliError::Config(
            "benchmark dimension must be at least 2".into(),
        ));
    }
    let cfg = SolverConfig::new(plan.m, plan.gamma);
    cfg.validate(plan.d)?;

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &n in &plan.n_list {
        let data_seed = derive_seed(plan.seed, BENCH_DATA, n as u64);
        // Two informative columns keep the data clustered; the rest is noise.
        let spec = SyntheticSpec {
            n,
            d_informative: 2.min(plan.d),
            d_noise: plan.d - 2.min(plan.d),
            k: 2,
            cluster_sep: 6.0,
            noise_sigma: 1.0,
            seed: data_seed,
        };
        let x = generate_synthetic(&spec)?.dataset.x;

        let mut best = BenchTiming {
            scatter_secs: f64::INFINITY,
            iteration_secs: f64::INFINITY,
            fit_secs: f64::INFINITY,
        };
        let mut fit_iterations = 0;
        for _ in 0..plan.trials {
            let (st, scatter_secs) = timed(|| scatter_matrix(&x));
            let (step, iteration_secs) = timed(|| {
                let g = DVector::from_element(plan.d, 1.0);
                update_w(&st, &g, cfg.gamma, cfg.m).and_then(|w| update_g(&w, cfg.p, cfg.eps))
            });
            step?;
            let (state, fit_secs) = timed(|| fit_scatter(&st, &cfg));
            fit_iterations = state?.iterations;
            best.scatter_secs = best.scatter_secs.min(scatter_secs);
            best.iteration_secs = best.iteration_secs.min(iteration_secs);
            best.fit_secs = best.fit_secs.min(fit_secs);
        }
        for (phase, secs) in [
            ("scatter", best.scatter_secs),
            ("iteration", best.iteration_secs),
        ] {
            if secs < MIN_RELIABLE_SECS {
                let msg = format!(
                    "n={n}: {phase} phase took {:.3} ms, below timer reliability",
                    secs * 1e3
                );
                warn!("{msg}");
                warnings.push(msg);
            }
        }
        rows.push(BenchRow {
            n,
            d: plan.d,
            data_seed,
            fit_iterations,
            timing: best,
        });
    }

    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let scatter: Vec<f64> = rows.iter().map(|r| r.timing.scatter_secs).collect();
    let total: Vec<f64> = rows
        .iter()
        .map(|r| r.timing.scatter_secs + r.timing.iteration_secs)
        .collect();
    let alpha_scatter = power_law_exponent(&ns, &scatter);
    let alpha_total = power_law_exponent(&ns, &total);
    let passed = alpha_scatter
        .zip(alpha_total)
        .map(|(a, b)| a <= plan.max_alpha && b <= plan.max_alpha);

    Ok(BenchReport {
        schema: SCHEMA_VERSION,
        command: "bench".into(),
        plan: plan.clone(),
        rows,
        timing: BenchSummary {
            alpha_scatter,
            alpha_total,
            passed,
            warnings,
        },
    })
}
