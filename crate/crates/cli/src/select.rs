//! `select`: normalize, fit, rank and keep the top `h` features.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use spcafs::data::{normalize, Dataset, NormalizeMode};
use spcafs::solver::{fit, rank_features, select_features, SolverConfig};
use spcafs::DataMatrix;

use crate::report::{config_hash, DatasetInfo};
use crate::{Result, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectReport {
    pub schema: u32,
    pub command: String,
    pub dataset: DatasetInfo,
    pub normalize: NormalizeMode,
    pub config: SolverConfig,
    pub config_hash: String,
    pub h: usize,
    /// Selected feature indices, best first.
    pub features: Vec<usize>,
    /// Row norm of `W` for each selected feature, aligned with `features`.
    pub scores: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub timing: SelectTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectTiming {
    pub fit_secs: f64,
}

#[derive(Serialize)]
struct HashInput<'a> {
    provenance: &'a str,
    normalize: NormalizeMode,
    config: &'a SolverConfig,
    h: usize,
}

/// Runs the full pipeline. Also returns the input restricted to the selected
/// columns (original, unnormalized values).
pub fn run_select(
    dataset: &Dataset,
    mode: NormalizeMode,
    cfg: &SolverConfig,
    h: usize,
) -> Result<(SelectReport, DataMatrix)> {
    let x = normalize(&dataset.x, mode);
    let start = Instant::now();
    let state = fit(&x, cfg)?;
    let fit_secs = start.elapsed().as_secs_f64();
    let ranking = rank_features(&state);
    let features = select_features(&ranking, h)?;
    let scores = features.iter().map(|&f| ranking.scores[f]).collect();
    let reduced = dataset.x.select_columns(&features)?;

    let report = SelectReport {
        schema: SCHEMA_VERSION,
        command: "select".into(),
        dataset: DatasetInfo::of(dataset),
        normalize: mode,
        config: *cfg,
        config_hash: config_hash(&HashInput {
            provenance: &dataset.provenance,
            normalize: mode,
            config: cfg,
            h,
        }),
        h,
        features,
        scores,
        objective_trace: state.objective_trace,
        iterations: state.iterations,
        converged: state.converged,
        timing: SelectTiming { fit_secs },
    };
    Ok((report, reduced))
}
