//! `sweep`: grid over γ and the number of selected features, scored by repeated
//! k-means, with baseline selections alongside.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spcafs::data::{normalize, Dataset, NormalizeMode};
use spcafs::eval::{evaluate_selection, LabelVector, Summary};
use spcafs::solver::{fit, rank_features, FeatureRanking, SolverConfig, SolverState};
use spcafs::DataMatrix;

use crate::report::{config_hash, DatasetInfo};
use crate::seeds::{derive_seed, RANDOM_BASELINE};
use crate::{CliError, Result, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    Explicit(usize),
    /// Number of ground-truth classes minus one.
    ClassesMinusOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub normalize: NormalizeMode,
    pub gammas: Vec<f64>,
    pub p: f64,
    pub eps: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub m: MRule,
    /// Feature counts; `None` means 10, 20, ..., 100 capped at `d`.
    pub h_list: Option<Vec<usize>>,
    pub repeats: usize,
    pub base_seed: u64,
    /// Worker threads, 0 for one per core. Does not affect results.
    #[serde(skip)]
    pub workers: usize,
}

impl ExperimentPlan {
    fn resolved_h_list(&self, d: usize) -> Result<Vec<usize>> {
        let list = match &self.h_list {
            Some(list) => list.clone(),
            None => {
                let defaults: Vec<usize> = (1..=10).map(|i| i * 10).filter(|&h| h <= d).collect();
                if defaults.is_empty() {
                    vec![d]
                } else {
                    defaults
                }
            }
        };
        if list.is_empty() {
            return Err(CliError::Config("feature-count list is empty".into()));
        }
        if let Some(&bad) = list.iter().find(|&&h| h == 0 || h > d) {
            return Err(CliError::Config(format!(
                "feature count {bad} outside [1, {d}]"
            )));
        }
        Ok(list)
    }

    fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(CliError::Config("gamma grid is empty".into()));
        }
        if self.repeats == 0 {
            return Err(CliError::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spcafs,
    AllFeatures,
    /// Top-h features by variance of the raw (unnormalized) input.
    Variance,
    /// Seeded uniform random subset.
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spcafs => "spcafs",
            Method::AllFeatures => "all_features",
            Method::Variance => "variance",
            Method::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub method: Method,
    pub gamma: Option<f64>,
    pub h: usize,
    pub m: Option<usize>,
    /// k-means repeat `r` used seed `kmeans_seed + r`.
    pub kmeans_seed: u64,
    pub selection_seed: Option<u64>,
    pub config_hash: String,
    pub features: Vec<usize>,
    pub acc: Option<Summary>,
    pub nmi: Option<Summary>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub objective_trace: Option<Vec<f64>>,
    pub error: Option<String>,
    pub timing: CellTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub fit_secs: f64,
    pub eval_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub command: String,
    pub dataset: DatasetInfo,
    pub plan: ExperimentPlan,
    pub m: usize,
    pub cells: Vec<Cell>,
    pub failures: usize,
    pub timing: SweepTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTiming {
    pub total_secs: f64,
}

#[derive(Serialize)]
struct CellKey<'a> {
    provenance: &'a str,
    normalize: NormalizeMode,
    method: Method,
    gamma: Option<f64>,
    p: f64,
    eps: f64,
    max_iters: usize,
    rel_tol: f64,
    m: Option<usize>,
    h: usize,
    repeats: usize,
    base_seed: u64,
    selection_seed: Option<u64>,
}

struct Job {
    method: Method,
    gamma_idx: Option<usize>,
    h: usize,
    selection: std::result::Result<Vec<usize>, String>,
    selection_seed: Option<u64>,
}

pub fn run_sweep(dataset: &Dataset, plan: &ExperimentPlan) -> Result<ExperimentReport> {
    let started = Instant::now();
    plan.validate()?;
    let truth = dataset
        .labels
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs ground-truth labels".into()))?;
    let d = dataset.x.n_features();
    let h_list = plan.resolved_h_list(d)?;
    let m = match plan.m {
        MRule::Explicit(m) => m,
        MRule::ClassesMinusOne => {
            let c = truth.n_distinct();
            if c < 2 {
                return Err(CliError::Config(
                    "labels have a single class; give m explicitly".into(),
                ));
            }
            c - 1
        }
    };
    let configs: Vec<SolverConfig> = plan
        .gammas
        .iter()
        .map(|&gamma| SolverConfig {
            m,
            gamma,
            p: plan.p,
            eps: plan.eps,
            max_iters: plan.max_iters,
            rel_tol: plan.rel_tol,
        })
        .collect();
    for cfg in &configs {
        cfg.validate(d)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let x = normalize(&dataset.x, plan.normalize);

    let (fits, cells) = pool.install(|| {
        let fits: Vec<(std::result::Result<SolverState, String>, f64)> = configs
            .par_iter()
            .map(|cfg| {
                let t = Instant::now();
                let res = fit(&x, cfg).map_err(|e| e.to_string());
                (res, t.elapsed().as_secs_f64())
            })
            .collect();
        let jobs = build_jobs(dataset, &fits, &h_list, plan.base_seed);
        let cells: Vec<Cell> = jobs
            .into_par_iter()
            .enumerate()
            .map(|(index, job)| evaluate_job(index, job, &x, truth, dataset, plan, m, &fits))
            .collect();
        (fits, cells)
    });
    drop(fits);

    let failures = cells.iter().filter(|c| c.error.is_some()).count();
    let mut plan_echo = plan.clone();
    plan_echo.h_list = Some(h_list);
    Ok(ExperimentReport {
        schema: SCHEMA_VERSION,
        command: "sweep".into(),
        dataset: DatasetInfo::of(dataset),
        plan: plan_echo,
        m,
        cells,
        failures,
        timing: SweepTiming {
            total_secs: started.elapsed().as_secs_f64(),
        },
    })
}

// Cell order: every (γ, h) pair γ-major, then the all-features baseline, then
// variance and random baselines for each h.
fn build_jobs(
    dataset: &Dataset,
    fits: &[(std::result::Result<SolverState, String>, f64)],
    h_list: &[usize],
    base_seed: u64,
) -> Vec<Job> {
    let d = dataset.x.n_features();
    let mut jobs = Vec::new();
    for (gi, (fit, _)) in fits.iter().enumerate() {
        let ranking = fit.as_ref().map(rank_features);
        for &h in h_list {
            jobs.push(Job {
                method: Method::Spcafs,
                gamma_idx: Some(gi),
                h,
                selection: ranking
                    .as_ref()
                    .map(|r| r.order[..h].to_vec())
                    .map_err(|e| e.to_string()),
                selection_seed: None,
            });
        }
    }
    jobs.push(Job {
        method: Method::AllFeatures,
        gamma_idx: None,
        h: d,
        selection: Ok((0..d).collect()),
        selection_seed: None,
    });
    let by_variance = variance_ranking(&dataset.x);
    for &h in h_list {
        jobs.push(Job {
            method: Method::Variance,
            gamma_idx: None,
            h,
            selection: Ok(by_variance.order[..h].to_vec()),
            selection_seed: None,
        });
        let seed = derive_seed(base_seed, RANDOM_BASELINE, h as u64);
        jobs.push(Job {
            method: Method::Random,
            gamma_idx: None,
            h,
            selection: Ok(random_subset(d, h, seed)),
            selection_seed: Some(seed),
        });
    }
    jobs
}

#[allow(clippy::too_many_arguments)]
fn evaluate_job(
    index: usize,
    job: Job,
    x: &DataMatrix,
    truth: &LabelVector,
    dataset: &Dataset,
    plan: &ExperimentPlan,
    m: usize,
    fits: &[(std::result::Result<SolverState, String>, f64)],
) -> Cell {
    let gamma = job.gamma_idx.map(|g| plan.gammas[g]);
    let fit = job.gamma_idx.map(|g| &fits[g]);
    let cell_m = fit.map(|_| m);
    let key = CellKey {
        provenance: &dataset.provenance,
        normalize: plan.normalize,
        method: job.method,
        gamma,
        p: plan.p,
        eps: plan.eps,
        max_iters: plan.max_iters,
        rel_tol: plan.rel_tol,
        m: cell_m,
        h: job.h,
        repeats: plan.repeats,
        base_seed: plan.base_seed,
        selection_seed: job.selection_seed,
    };
    let state = fit.and_then(|(r, _)| r.as_ref().ok());

    let t = Instant::now();
    let outcome = job.selection.and_then(|features| {
        evaluate_selection(x, truth, &features, plan.repeats, plan.base_seed)
            .map(|s| (features, s))
            .map_err(|e| e.to_string())
    });
    let eval_secs = t.elapsed().as_secs_f64();

    let (features, acc, nmi, error) = match outcome {
        Ok((features, s)) => (features, Some(s.acc), Some(s.nmi), None),
        Err(e) => (Vec::new(), None, None, Some(e)),
    };
    Cell {
        index,
        method: job.method,
        gamma,
        h: job.h,
        m: cell_m,
        kmeans_seed: plan.base_seed,
        selection_seed: job.selection_seed,
        config_hash: config_hash(&key),
        features,
        acc,
        nmi,
        iterations: state.map(|s| s.iterations),
        converged: state.map(|s| s.converged),
        objective_trace: state.map(|s| s.objective_trace.clone()),
        error,
        timing: CellTiming {
            fit_secs: fit.map_or(0.0, |(_, secs)| *secs),
            eval_secs,
        },
    }
}

/// Features ordered by descending population variance, ties by index.
pub fn variance_ranking(x: &DataMatrix) -> FeatureRanking {
    let n = x.n_samples() as f64;
    let means = x.column_means();
    let variances = x
        .as_matrix()
        .column_iter()
        .zip(means.iter())
        .map(|(c, mean)| c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
        .collect();
    FeatureRanking::from_scores(variances)
}

pub fn random_subset(d: usize, h: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<usize> = (0..d).collect();
    all.shuffle(&mut rng);
    all.truncate(h);
    all
}

pub const CSV_COLUMNS: [&str; 11] = [
    "method",
    "gamma",
    "h",
    "metric",
    "mean",
    "std",
    "max",
    "repeats",
    "base_seed",
    "config_hash",
    "status",
];

/// Flat plotting table: one row per cell and metric (`acc`, `nmi`).
pub fn write_csv<W: Write>(report: &ExperimentReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for cell in &report.cells {
        let gamma = cell.gamma.map(|g| g.to_string()).unwrap_or_default();
        for (metric, summary) in [("acc", cell.acc), ("nmi", cell.nmi)] {
            let (mean, std, max) = summary.map_or_else(
                || (String::new(), String::new(), String::new()),
                |s| (s.mean.to_string(), s.std.to_string(), s.max.to_string()),
            );
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                cell.method.name(),
                gamma,
                cell.h,
                metric,
                mean,
                std,
                max,
                report.plan.repeats,
                report.plan.base_seed,
                cell.config_hash,
                if cell.error.is_none() { "ok" } else { "failed" },
            )?;
        }
    }
    Ok(())
}
