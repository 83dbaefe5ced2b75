//! Layered settings: command-line flags over a JSON config file over defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spcafs::data::{self, Dataset, LabelColumn, NormalizeMode};
use spcafs::solver::{SolverConfig, DEFAULT_EPS, DEFAULT_MAX_ITERS, DEFAULT_REL_TOL};

use crate::sweep::{ExperimentPlan, MRule};
use crate::{CliError, Result};

pub const DEFAULT_GAMMA_GRID: [f64; 7] = [1e-6, 1e-4, 1e-2, 1e0, 1e2, 1e4, 1e6];
pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_P: f64 = 1.0;
pub const DEFAULT_REPEATS: usize = 20;
pub const DEFAULT_SEED: u64 = 0;

/// Accepts either a scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Every setting the commands read. Unset fields fall through to the next layer.
///
/// Field names follow `SolverConfig` and `ExperimentPlan`; the command-line
/// spellings (`epsilon`, `tol`, `seed`, `gammas`, `h_list`) are accepted as aliases.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(alias = "dataset")]
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub label_column: Option<String>,
    pub header: Option<bool>,
    pub normalize: Option<NormalizeMode>,
    #[serde(alias = "gammas")]
    pub gamma: Option<OneOrMany<f64>>,
    pub p: Option<f64>,
    pub m: Option<usize>,
    #[serde(alias = "epsilon")]
    pub eps: Option<f64>,
    #[serde(alias = "h_list")]
    pub h: Option<OneOrMany<usize>>,
    pub repeats: Option<usize>,
    #[serde(alias = "seed")]
    pub base_seed: Option<u64>,
    pub max_iters: Option<usize>,
    #[serde(alias = "tol")]
    pub rel_tol: Option<f64>,
    pub workers: Option<usize>,
}

macro_rules! layer {
    ($hi:ident, $lo:ident, $($field:ident),*) => {
        Settings { $($field: $hi.$field.or($lo.$field),)* }
    };
}

impl Settings {
    /// Values set in `self` win over `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        let hi = self;
        let lo = lower;
        layer!(
            hi,
            lo,
            input,
            labels,
            label_column,
            header,
            normalize,
            gamma,
            p,
            m,
            eps,
            h,
            repeats,
            base_seed,
            max_iters,
            rel_tol,
            workers
        )
    }

    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn normalize_mode(&self) -> NormalizeMode {
        self.normalize.unwrap_or_default()
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }

    /// Loads the input CSV and attaches labels from `labels` when given.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let input = self
            .input
            .as_ref()
            .ok_or_else(|| CliError::Config("no input file given (--input)".into()))?;
        let label_column: Option<LabelColumn> =
            self.label_column.as_deref().map(|s| s.parse().unwrap());
        let mut ds = data::load_csv(input, self.header.unwrap_or(false), label_column.as_ref())?;
        if let Some(path) = &self.labels {
            let labels = data::load_labels(path)?;
            if labels.len() != ds.x.n_samples() {
                return Err(CliError::Data(format!(
                    "{} has {} labels for {} samples",
                    path.display(),
                    labels.len(),
                    ds.x.n_samples()
                )));
            }
            ds.labels = Some(labels);
        }
        Ok(ds)
    }

    fn single<T: Clone + std::fmt::Debug>(
        name: &str,
        v: &Option<OneOrMany<T>>,
    ) -> Result<Option<T>> {
        match v.as_ref().map(OneOrMany::to_vec) {
            None => Ok(None),
            Some(list) if list.len() == 1 => Ok(Some(list[0].clone())),
            Some(list) => Err(CliError::Config(format!(
                "--{name} takes a single value for this command, got {list:?}"
            ))),
        }
    }

    /// Reduced dimension: explicit `m`, else classes − 1 from the labels.
    pub fn resolve_m(&self, dataset: &Dataset) -> Result<usize> {
        if let Some(m) = self.m {
            return Ok(m);
        }
        match &dataset.labels {
            Some(l) if l.n_distinct() >= 2 => Ok(l.n_distinct() - 1),
            Some(_) => Err(CliError::Config(
                "labels have a single class; give --m explicitly".into(),
            )),
            None => Err(CliError::Config(
                "no labels to derive m = classes - 1; give --m explicitly".into(),
            )),
        }
    }

    /// Solver configuration for single-fit commands (`select`, `trace`).
    pub fn solver_config(&self, dataset: &Dataset) -> Result<SolverConfig> {
        let gamma = Self::single("gamma", &self.gamma)?.unwrap_or(DEFAULT_GAMMA);
        let cfg = SolverConfig {
            m: self.resolve_m(dataset)?,
            gamma,
            p: self.p.unwrap_or(DEFAULT_P),
            eps: self.eps.unwrap_or(DEFAULT_EPS),
            max_iters: self.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
            rel_tol: self.rel_tol.unwrap_or(DEFAULT_REL_TOL),
        };
        cfg.validate(dataset.x.n_features())?;
        Ok(cfg)
    }

    pub fn single_h(&self) -> Result<usize> {
        Self::single("h", &self.h)?
            .ok_or_else(|| CliError::Config("number of features to select not given (--h)".into()))
    }

    pub fn experiment_plan(&self) -> ExperimentPlan {
        ExperimentPlan {
            normalize: self.normalize_mode(),
            gammas: self
                .gamma
                .as_ref()
                .map_or_else(|| DEFAULT_GAMMA_GRID.to_vec(), OneOrMany::to_vec),
            p: self.p.unwrap_or(DEFAULT_P),
            eps: self.eps.unwrap_or(DEFAULT_EPS),
            max_iters: self.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
            rel_tol: self.rel_tol.unwrap_or(DEFAULT_REL_TOL),
            m: self.m.map_or(MRule::ClassesMinusOne, MRule::Explicit),
            h_list: self.h.as_ref().map(OneOrMany::to_vec),
            repeats: self.repeats.unwrap_or(DEFAULT_REPEATS),
            base_seed: self.base_seed(),
            workers: self.workers(),
        }
    }
}
