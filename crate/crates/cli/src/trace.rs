//! `trace`: objective value per iteration for one fit.

use std::io::Write;

use serde::{Deserialize, Serialize};
use spcafs::data::{normalize, Dataset, NormalizeMode};
use spcafs::solver::{fit, SolverConfig};

use crate::report::{config_hash, DatasetInfo};
use crate::{Result, SCHEMA_VERSION};

/// Largest allowed increase between consecutive objective values.
pub const MONOTONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub schema: u32,
    pub command: String,
    pub dataset: DatasetInfo,
    pub normalize: NormalizeMode,
    pub config: SolverConfig,
    pub config_hash: String,
    pub rows: Vec<TraceRow>,
    pub iterations: usize,
    pub converged: bool,
    pub monotone: bool,
}

#[derive(Serialize)]
struct HashInput<'a> {
    provenance: &'a str,
    normalize: NormalizeMode,
    config: &'a SolverConfig,
}

pub fn is_non_increasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol)
}

pub fn run_convergence(
    dataset: &Dataset,
    mode: NormalizeMode,
    cfg: &SolverConfig,
) -> Result<TraceReport> {
    let x = normalize(&dataset.x, mode);
    let state = fit(&x, cfg)?;
    let rows = state
        .objective_trace
        .iter()
        .enumerate()
        .map(|(i, &objective)| TraceRow {
            iteration: i + 1,
            objective,
        })
        .collect();
    Ok(TraceReport {
        schema: SCHEMA_VERSION,
        command: "trace".into(),
        dataset: DatasetInfo::of(dataset),
        normalize: mode,
        config: *cfg,
        config_hash: config_hash(&HashInput {
            provenance: &dataset.provenance,
            normalize: mode,
            config: cfg,
        }),
        monotone: is_non_increasing(&state.objective_trace, MONOTONE_TOL),
        rows,
        iterations: state.iterations,
        converged: state.converged,
    })
}

pub fn write_csv<W: Write>(report: &TraceReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,objective")?;
    for row in &report.rows {
        writeln!(out, "{},{}", row.iteration, row.objective)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use spcafs::data::{generate_synthetic, SyntheticSpec};

    #[test]
    fn planted_trace_is_short_and_monotone() {
        let data = generate_synthetic(&SyntheticSpec::planted(0)).unwrap();
        let cfg = SolverConfig::new(3, 1.0);
        let report = run_convergence(&data.dataset, NormalizeMode::None, &cfg).unwrap();
        assert!(report.monotone);
        assert!(report.converged);
        assert!(report.iterations <= 30);

        let mut csv = Vec::new();
        write_csv(&report, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("iteration,objective\n1,"));
        assert_eq!(text.lines().count(), report.iterations + 1);
    }

    #[test]
    fn monotone_check_tolerance() {
        assert!(is_non_increasing(&[3.0, 2.0, 2.0 + 5e-11], 1e-10));
        assert!(!is_non_increasing(&[3.0, 2.0, 2.1], 1e-10));
        assert!(is_non_increasing(&[], 1e-10));
    }
}
