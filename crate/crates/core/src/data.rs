//! Dataset ingestion, normalization and planted-feature synthetic data.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::LabelVector;
use crate::linalg::DataMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DataMatrix,
    pub labels: Option<LabelVector>,
    pub feature_names: Option<Vec<String>>,
    /// Source path or generator descriptor.
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        x: DataMatrix,
        labels: Option<LabelVector>,
        feature_names: Option<Vec<String>>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != x.n_samples() {
                return Err(Error::InvalidDimension(format!(
                    "{} labels for {} samples",
                    l.len(),
                    x.n_samples()
                )));
            }
        }
        if let Some(names) = &feature_names {
            if names.len() != x.n_features() {
                return Err(Error::InvalidDimension(format!(
                    "{} feature names for {} features",
                    names.len(),
                    x.n_features()
                )));
            }
        }
        Ok(Self {
            x,
            labels,
            feature_names,
            provenance: provenance.into(),
        })
    }
}

/// Which CSV column carries the class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    /// 0-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: Option<&LabelColumn>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, &path.display().to_string(), has_header, label_column)
}

/// Parses comma-separated samples from `reader`. `source` names the input in errors.
pub fn read_csv<R: Read>(
    reader: R,
    source: &str,
    has_header: bool,
    label_column: Option<&LabelColumn>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_reader(reader);
    let parse_err = |row: u64, column: usize, message: String| Error::Parse {
        path: source.to_string(),
        row,
        column,
        message,
    };

    let header: Option<Vec<String>> = if has_header {
        let h = rdr.headers().map_err(|e| parse_err(1, 0, e.to_string()))?;
        Some(h.iter().map(|s| s.trim().to_string()).collect())
    } else {
        None
    };

    let label_idx = match (label_column, &header) {
        (None, _) => None,
        (Some(LabelColumn::Index(i)), _) => Some(*i),
        (Some(LabelColumn::Name(name)), Some(h)) => Some(
            h.iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::InvalidData(format!("{source}: no column named {name:?}")))?,
        ),
        (Some(LabelColumn::Name(name)), None) => {
            return Err(Error::InvalidParameter(format!(
                "label column {name:?} given by name but the file has no header"
            )))
        }
    };

    let mut width: Option<usize> = header.as_ref().map(Vec::len);
    let mut values: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut n = 0usize;

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            parse_err(row, 0, e.to_string())
        })?;
        let row = record.position().map_or(n as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(
                    row,
                    record.len().min(w) + 1,
                    format!("ragged row: expected {w} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_idx {
                raw_labels.push(cell.trim().to_string());
                continue;
            }
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(row, col + 1, format!("non-numeric value {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(
                    row,
                    col + 1,
                    format!("non-finite value {cell:?}"),
                ));
            }
            values.push(v);
        }
        n += 1;
    }

    let width = width.unwrap_or(0);
    if let Some(i) = label_idx {
        if i >= width {
            return Err(Error::InvalidData(format!(
                "{source}: label column {i} out of range for {width} columns"
            )));
        }
    }
    let d = width - usize::from(label_idx.is_some());
    if n < 2 || d == 0 {
        return Err(Error::InvalidData(format!(
            "{source}: need at least 2 rows and 1 feature column, found {n} rows and {d} features"
        )));
    }
    let x = DataMatrix::new(DMatrix::from_row_slice(n, d, &values))?;
    let labels = label_idx
        .map(|_| LabelVector::from_values(&raw_labels))
        .transpose()?;
    let feature_names = header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, s)| s)
            .collect()
    });
    Dataset::new(x, labels, feature_names, source)
}

/// Writes the matrix as CSV, one sample per line. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(
    x: &DataMatrix,
    feature_names: Option<&[String]>,
    writer: W,
) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidData(format!("writing CSV: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    if let Some(names) = feature_names {
        w.write_record(names).map_err(io)?;
    }
    for row in x.as_matrix().row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidData(format!("writing CSV: {e}")))?;
    Ok(())
}

pub fn save_csv(
    x: &DataMatrix,
    feature_names: Option<&[String]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(x, feature_names, file)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeMode {
    /// Per-feature `(x - mean) / std` with the population standard deviation.
    #[default]
    Zscore,
    /// Per-feature rescale to `[0, 1]`.
    Minmax,
    None,
}

impl FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zscore" => Ok(Self::Zscore),
            "minmax" => Ok(Self::Minmax),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization {other:?}; expected zscore, minmax or none"
            ))),
        }
    }
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zscore => "zscore",
            Self::Minmax => "minmax",
            Self::None => "none",
        })
    }
}

/// Per-feature normalization. Constant features map to all zeros in both scaling modes.
pub fn normalize(x: &DataMatrix, mode: NormalizeMode) -> DataMatrix {
    let mut m = x.as_matrix().clone();
    let n = m.nrows() as f64;
    match mode {
        NormalizeMode::None => {}
        NormalizeMode::Zscore => {
            for mut col in m.column_iter_mut() {
                let mean = col.sum() / n;
                col.add_scalar_mut(-mean);
                let std = (col.norm_squared() / n).sqrt();
                if std > 0.0 {
                    col.unscale_mut(std);
                } else {
                    col.fill(0.0);
                }
            }
        }
        NormalizeMode::Minmax => {
            for mut col in m.column_iter_mut() {
                let (lo, hi) = (col.min(), col.max());
                if hi > lo {
                    col.apply(|v| *v = (*v - lo) / (hi - lo));
                } else {
                    col.fill(0.0);
                }
            }
        }
    }
    DataMatrix::new(m).expect("normalization preserves shape and finiteness")
}

/// Parameters of a planted-features dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d_informative: usize,
    pub d_noise: usize,
    pub k: usize,
    /// Minimum pairwise distance between cluster centers.
    pub cluster_sep: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The reference planted problem: 200 samples, 10 informative and 40 noise
    /// features, 4 clusters separated by 6σ.
    pub fn planted(seed: u64) -> Self {
        Self {
            n: 200,
            d_informative: 10,
            d_noise: 40,
            k: 4,
            cluster_sep: 6.0,
            noise_sigma: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!(
                "synthetic data needs k >= 2 clusters, got {}",
                self.k
            )));
        }
        if self.n < self.k {
            return Err(Error::InvalidParameter(format!(
                "synthetic data needs n >= k, got n={} k={}",
                self.n, self.k
            )));
        }
        if self.d_informative == 0 {
            return Err(Error::InvalidParameter(
                "synthetic data needs at least one informative feature".into(),
            ));
        }
        for (name, v) in [
            ("cluster_sep", self.cluster_sep),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// Sorted column indices of the informative features.
    pub informative: Vec<usize>,
}

/// Companion JSON written next to an exported synthetic CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSidecar {
    pub seed: u64,
    pub spec: SyntheticSpec,
    pub labels: Vec<usize>,
    pub informative: Vec<usize>,
}

/// Draws a planted-features dataset.
///
/// Cluster centers are Gaussian in the informative subspace, rescaled so the
/// closest pair sits exactly `cluster_sep` apart. Class sizes are balanced, and
/// informative columns are scattered among the noise columns.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (k, di) = (spec.k, spec.d_informative);
    let d = di + spec.d_noise;

    let centers = loop {
        let c: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..di).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let mut min_dist = f64::INFINITY;
        for a in 0..k {
            for b in a + 1..k {
                let dist = c[a]
                    .iter()
                    .zip(&c[b])
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                min_dist = min_dist.min(dist);
            }
        }
        if min_dist > 1e-9 {
            let scale = spec.cluster_sep / min_dist;
            break c
                .into_iter()
                .map(|v| v.into_iter().map(|x| x * scale).collect::<Vec<_>>())
                .collect::<Vec<_>>();
        }
    };

    let mut labels: Vec<usize> = (0..spec.n).map(|i| i % k).collect();
    labels.shuffle(&mut rng);
    let mut columns: Vec<usize> = (0..d).collect();
    columns.shuffle(&mut rng);
    let (inf_cols, _) = columns.split_at(di);

    let mut x = DMatrix::zeros(spec.n, d);
    for i in 0..spec.n {
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[(i, j)] = spec.noise_sigma * z;
        }
        for (f, &col) in inf_cols.iter().enumerate() {
            x[(i, col)] += centers[labels[i]][f];
        }
    }

    let mut informative = inf_cols.to_vec();
    informative.sort_unstable();
    let provenance = format!(
        "synthetic(n={},d_informative={},d_noise={},k={},cluster_sep={},noise_sigma={},seed={})",
        spec.n,
        spec.d_informative,
        spec.d_noise,
        spec.k,
        spec.cluster_sep,
        spec.noise_sigma,
        spec.seed
    );
    let names = (0..d).map(|j| format!("f{j}")).collect();
    Ok(SyntheticData {
        dataset: Dataset::new(
            DataMatrix::new(x)?,
            Some(LabelVector::with_k(labels, k)?),
            Some(names),
            provenance,
        )?,
        informative,
    })
}

/// Reads labels from a sidecar JSON (`{"labels": [...]}`) or a file with one label per line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVector> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim_start().starts_with('{') {
        #[derive(Deserialize)]
        struct Labels {
            labels: Vec<serde_json::Value>,
        }
        let parsed: Labels = serde_json::from_str(&text).map_err(|e| {
            Error::InvalidData(format!("{}: invalid label JSON: {e}", path.display()))
        })?;
        let raw: Vec<String> = parsed
            .labels
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect();
        return LabelVector::from_values(&raw);
    }
    let raw: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    LabelVector::from_values(&raw)
}
