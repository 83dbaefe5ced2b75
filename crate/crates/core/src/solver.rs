//! Alternating eigen-solver for ℓ2,p-regularized sparse PCA.
//!
//! Given the scatter matrix `St`, the solver minimizes
//!
//! ```text
//! f(W) = -Tr(WᵀStW) + γ Σ_i (‖wⁱ‖² + ε)^{p/2}    subject to WᵀW = I_m
//! ```
//!
//! by alternating two closed-form steps starting from `G = I`:
//!
//! 1. `W` ← eigenvectors of `-St + γG` for the `m` smallest eigenvalues;
//! 2. `G` ← `diag((p/2)(‖wⁱ‖² + ε)^{(p-2)/2})`.
//!
//! Each pass does not increase `f`. Features are then ranked by `‖wⁱ‖₂`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    check_exponent, l2p_norm_pow, row_norms, scatter_matrix, smallest_m_eigenvectors, DataMatrix,
    SymmetricMatrix,
};

pub const DEFAULT_EPS: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_REL_TOL: f64 = 1e-6;

/// Rows with norm above this count as non-zero.
pub const NONZERO_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Reduced dimension (number of columns of `W`).
    pub m: usize,
    pub gamma: f64,
    pub p: f64,
    pub eps: f64,
    pub max_iters: usize,
    /// Stop once `|f_t - f_{t-1}| / max(1, |f_{t-1}|)` drops below this.
    pub rel_tol: f64,
}

impl SolverConfig {
    /// Config with `p = 1` and default smoothing and stopping rule.
    pub fn new(m: usize, gamma: f64) -> Self {
        Self {
            m,
            gamma,
            p: 1.0,
            eps: DEFAULT_EPS,
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// Checks the parameter ranges against a problem with `d` features.
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "regularization weight gamma must be positive and finite, got {}",
                self.gamma
            )));
        }
        check_exponent(self.p)?;
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "smoothing constant epsilon must be positive and finite, got {}",
                self.eps
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "relative tolerance must be non-negative, got {}",
                self.rel_tol
            )));
        }
        if self.m == 0 || self.m > d {
            return Err(Error::InvalidDimension(format!(
                "reduced dimension m must lie in [1, {d}], got {}",
                self.m
            )));
        }
        Ok(())
    }
}

/// `d x m` matrix with orthonormal columns whose row norms score the features.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix(DMatrix<f64>);

impl ProjectionMatrix {
    /// Wraps `w` after checking `WᵀW = I` within `1e-6`.
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        let m = w.ncols();
        if m == 0 || m > w.nrows() {
            return Err(Error::InvalidDimension(format!(
                "projection must be d x m with 1 <= m <= d, got {}x{m}",
                w.nrows()
            )));
        }
        let dev = (w.transpose() * &w - DMatrix::identity(m, m)).amax();
        if !(dev <= 1e-6) {
            return Err(Error::InvalidData(format!(
                "projection columns are not orthonormal (max deviation {dev:e})"
            )));
        }
        Ok(Self(w))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n_features(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.0.ncols()
    }

    pub fn row_norms(&self) -> Vec<f64> {
        row_norms(&self.0)
    }

    /// Number of rows with norm above [`NONZERO_ROW_TOL`].
    pub fn nonzero_rows(&self) -> usize {
        self.row_norms()
            .iter()
            .filter(|&&r| r > NONZERO_ROW_TOL)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub w: ProjectionMatrix,
    /// Diagonal of the reweighting matrix computed from `w`.
    pub g_diag: DVector<f64>,
    /// Objective value after each `W` update.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Whether the relative-change rule fired before `max_iters`.
    pub converged: bool,
}

/// Snapshot handed to the observer of [`fit_scatter_with`] after every iteration.
pub struct IterationRecord<'a> {
    pub iteration: usize,
    pub w: &'a ProjectionMatrix,
    pub g_diag: &'a DVector<f64>,
    pub objective: f64,
}

/// Features ordered by descending row norm of `W`, ties by ascending index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

impl FeatureRanking {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self { order, scores }
    }
}

/// `-Tr(WᵀStW) + γ Σ_i (‖wⁱ‖² + ε)^{p/2}` with parameters taken from `cfg`.
pub fn objective(w: &ProjectionMatrix, st: &SymmetricMatrix, cfg: &SolverConfig) -> Result<f64> {
    objective_value(w.as_matrix(), st, cfg.gamma, cfg.p, cfg.eps)
}

/// Objective for an arbitrary `d x m` matrix. Unlike [`SolverConfig`], `gamma = 0` is accepted
/// here, which reduces the value to the plain PCA criterion.
pub fn objective_value(
    w: &DMatrix<f64>,
    st: &SymmetricMatrix,
    gamma: f64,
    p: f64,
    eps: f64,
) -> Result<f64> {
    if w.nrows() != st.dim() {
        return Err(Error::InvalidDimension(format!(
            "projection has {} rows but scatter matrix is {1}x{1}",
            w.nrows(),
            st.dim()
        )));
    }
    let trace = (w.transpose() * st.as_matrix() * w).trace();
    Ok(-trace + gamma * l2p_norm_pow(w, p, eps)?)
}

/// Reweighting diagonal `g_i = (p/2)(‖wⁱ‖² + ε)^{(p-2)/2}`.
pub fn update_g(w: &ProjectionMatrix, p: f64, eps: f64) -> Result<DVector<f64>> {
    check_exponent(p)?;
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing constant must be non-negative, got {eps}"
        )));
    }
    let exponent = (p - 2.0) / 2.0;
    let g = DVector::from_iterator(
        w.n_features(),
        w.as_matrix()
            .row_iter()
            .map(|r| 0.5 * p * (r.norm_squared() + eps).powf(exponent)),
    );
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "reweighting entry {i} is not finite; a zero row needs epsilon > 0"
        )));
    }
    Ok(g)
}

/// Minimizer of `Tr(Wᵀ(-St + γG)W)` over orthonormal `d x m` frames.
pub fn update_w(
    st: &SymmetricMatrix,
    g_diag: &DVector<f64>,
    gamma: f64,
    m: usize,
) -> Result<ProjectionMatrix> {
    if g_diag.len() != st.dim() {
        return Err(Error::InvalidDimension(format!(
            "reweighting vector has length {} but scatter matrix is {1}x{1}",
            g_diag.len(),
            st.dim()
        )));
    }
    let mut a = -st.as_matrix().clone();
    for (i, g) in g_diag.iter().enumerate() {
        a[(i, i)] += gamma * g;
    }
    let w = smallest_m_eigenvectors(&SymmetricMatrix::new(a)?, m)?;
    ProjectionMatrix::new(w).map_err(|e| Error::Numeric {
        iteration: 0,
        message: e.to_string(),
    })
}

/// Runs the alternating solver on a data matrix.
pub fn fit(x: &DataMatrix, cfg: &SolverConfig) -> Result<SolverState> {
    cfg.validate(x.n_features())?;
    if cfg.m > x.n_samples() {
        warn!(
            "reduced dimension m={} exceeds sample count n={}",
            cfg.m,
            x.n_samples()
        );
    }
    fit_scatter(&scatter_matrix(x), cfg)
}

/// Runs the alternating solver on a precomputed scatter matrix.
pub fn fit_scatter(st: &SymmetricMatrix, cfg: &SolverConfig) -> Result<SolverState> {
    fit_scatter_with(st, cfg, |_| {})
}

/// Like [`fit_scatter`], calling `observer` after every (W, G) update pair.
pub fn fit_scatter_with<F>(
    st: &SymmetricMatrix,
    cfg: &SolverConfig,
    mut observer: F,
) -> Result<SolverState>
where
    F: FnMut(&IterationRecord<'_>),
{
    let d = st.dim();
    cfg.validate(d)?;

    let mut g = DVector::from_element(d, 1.0);
    let mut trace: Vec<f64> = Vec::new();
    let mut w = None;
    let mut converged = false;

    for iteration in 1..=cfg.max_iters {
        let at = |e: Error| match e {
            Error::Numeric { message, .. } => Error::Numeric { iteration, message },
            Error::InvalidData(message) => Error::Numeric { iteration, message },
            other => other,
        };
        let next_w = update_w(st, &g, cfg.gamma, cfg.m).map_err(at)?;
        let f = objective(&next_w, st, cfg)?;
        if !f.is_finite() {
            return Err(Error::Numeric {
                iteration,
                message: format!("objective evaluated to {f}"),
            });
        }
        g = update_g(&next_w, cfg.p, cfg.eps).map_err(at)?;
        observer(&IterationRecord {
            iteration,
            w: &next_w,
            g_diag: &g,
            objective: f,
        });
        w = Some(next_w);

        let prev = trace.last().copied();
        trace.push(f);
        if let Some(prev) = prev {
            if (f - prev).abs() / prev.abs().max(1.0) < cfg.rel_tol {
                converged = true;
                break;
            }
        }
    }

    Ok(SolverState {
        w: w.expect("max_iters >= 1 guarantees one iteration"),
        g_diag: g,
        iterations: trace.len(),
        objective_trace: trace,
        converged,
    })
}

pub fn rank_features(state: &SolverState) -> FeatureRanking {
    FeatureRanking::from_scores(state.w.row_norms())
}

/// The first `h` features of the ranking.
pub fn select_features(ranking: &FeatureRanking, h: usize) -> Result<Vec<usize>> {
    if h == 0 || h > ranking.order.len() {
        return Err(Error::InvalidParameter(format!(
            "number of selected features h must lie in [1, {}], got {h}",
            ranking.order.len()
        )));
    }
    Ok(ranking.order[..h].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen;
    use crate::linalg::test_util::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn naive_objective(w: &DMatrix<f64>, st: &DMatrix<f64>, gamma: f64, p: f64, eps: f64) -> f64 {
        let (d, m) = w.shape();
        let mut tr = 0.0;
        for k in 0..m {
            for i in 0..d {
                for j in 0..d {
                    tr += w[(i, k)] * st[(i, j)] * w[(j, k)];
                }
            }
        }
        let mut pen = 0.0;
        for i in 0..d {
            let mut sq = 0.0;
            for k in 0..m {
                sq += w[(i, k)] * w[(i, k)];
            }
            pen += (sq + eps).powf(p / 2.0);
        }
        -tr + gamma * pen
    }

    #[test]
    fn objective_direct_substitution() {
        let st = SymmetricMatrix::from_diagonal(&[5.0, 1.0]);
        let w = ProjectionMatrix::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let cfg = SolverConfig::new(1, 1.0).with_eps(0.0);
        assert_abs_diff_eq!(objective(&w, &st, &cfg).unwrap(), -4.0, epsilon = 1e-15);
    }

    #[test]
    fn objective_reduces_to_pca_without_penalty() {
        let mut r = rng(21);
        let x = gaussian(&mut r, 30, 6);
        let st = scatter_matrix(&DataMatrix::new(x).unwrap());
        let e = symmetric_eigen(&st).unwrap();
        let top = e.eigenvectors.columns(4, 2).into_owned();
        let expected = -(e.eigenvalues[4] + e.eigenvalues[5]);
        let got = objective_value(&top, &st, 0.0, 1.0, 1e-8).unwrap();
        assert!((got - expected).abs() <= 1e-10 * expected.abs());
    }

    #[test]
    fn objective_matches_loop_oracle() {
        let mut r = rng(22);
        for _ in 0..10 {
            let st = SymmetricMatrix::new(random_symmetric(&mut r, 7)).unwrap();
            let w = random_orthonormal(&mut r, 7, 3);
            for (gamma, p) in [(0.5, 1.0), (3.0, 0.5)] {
                let got = objective_value(&w, &st, gamma, p, 1e-8).unwrap();
                let want = naive_objective(&w, st.as_matrix(), gamma, p, 1e-8);
                assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
            }
        }
        let st = SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            objective_value(&DMatrix::zeros(2, 1), &st, 1.0, 1.0, 0.0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn update_g_examples() {
        let w =
            ProjectionMatrix::new(DMatrix::from_column_slice(4, 1, &[0.5, 0.5, 0.5, 0.5])).unwrap();
        let g = update_g(&w, 1.0, 0.0).unwrap();
        assert!(g.iter().all(|&v| (v - 1.0).abs() < 1e-15));

        let w = ProjectionMatrix::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let g = update_g(&w, 1.0, 1e-8).unwrap();
        assert!((g[1] - 5000.0).abs() <= 1e-12 * 5000.0);
        assert!(update_g(&w, 1.0, 0.0).is_err());
    }

    #[test]
    fn update_g_matches_loop_oracle() {
        let mut r = rng(23);
        let w = ProjectionMatrix::new(random_orthonormal(&mut r, 9, 3)).unwrap();
        let g = update_g(&w, 1.0, 1e-8).unwrap();
        for i in 0..9 {
            let mut sq = 0.0;
            for k in 0..3 {
                sq += w.as_matrix()[(i, k)].powi(2);
            }
            let want = 0.5 / (sq + 1e-8).sqrt();
            assert!((g[i] - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn update_w_examples() {
        let st = SymmetricMatrix::from_diagonal(&[5.0, 1.0, 0.1]);
        let w = update_w(&st, &DVector::from_element(3, 1.0), 1e-12, 1).unwrap();
        assert_abs_diff_eq!(w.as_matrix()[(0, 0)].abs(), 1.0, epsilon = 1e-12);

        let st = SymmetricMatrix::from_diagonal(&[0.0, 0.0, 0.0]);
        let g = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let w = update_w(&st, &g, 1.0, 1).unwrap();
        assert_abs_diff_eq!(w.as_matrix()[(0, 0)].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn update_w_beats_random_frames() {
        let mut r = rng(24);
        let st = SymmetricMatrix::new(random_symmetric(&mut r, 8)).unwrap();
        let g = DVector::from_fn(8, |_, _| r.random_range(0.1..5.0));
        let gamma = 0.7;
        let w = update_w(&st, &g, gamma, 2).unwrap();
        let mut a = -st.as_matrix().clone();
        a += DMatrix::from_diagonal(&(&g * gamma));
        let val = |q: &DMatrix<f64>| (q.transpose() * &a * q).trace();
        let best = val(w.as_matrix());
        for _ in 0..100 {
            let q = random_orthonormal(&mut r, 8, 2);
            assert!(best <= val(&q) + 1e-9);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(2, 1.0).validate(5).is_ok());
        assert!(SolverConfig::new(2, 0.0).validate(5).is_err());
        assert!(SolverConfig::new(2, 1.0).with_p(1.5).validate(5).is_err());
        assert!(SolverConfig::new(2, 1.0).with_p(0.0).validate(5).is_err());
        assert!(SolverConfig::new(2, 1.0).with_eps(0.0).validate(5).is_err());
        assert!(SolverConfig::new(6, 1.0).validate(5).is_err());
        assert!(SolverConfig::new(0, 1.0).validate(5).is_err());
        assert!(SolverConfig::new(2, 1.0)
            .with_max_iters(0)
            .validate(5)
            .is_err());
    }

    #[test]
    fn fit_descends_and_keeps_invariants() {
        let mut r = rng(25);
        let x = DataMatrix::new(gaussian(&mut r, 40, 12)).unwrap();
        let st = scatter_matrix(&x);
        for (gamma, p) in [(0.01, 1.0), (1.0, 0.5), (100.0, 1.0)] {
            let cfg = SolverConfig::new(3, gamma).with_p(p);
            let mut checked = 0;
            let state = fit_scatter_with(&st, &cfg, |rec| {
                assert!(rec.w.nonzero_rows() >= 3);
                assert!(rec.g_diag.iter().all(|g| *g > 0.0 && g.is_finite()));
                checked += 1;
            })
            .unwrap();
            assert_eq!(checked, state.iterations);
            assert!(state
                .objective_trace
                .windows(2)
                .all(|w| w[1] <= w[0] + 1e-10));
        }
    }

    #[test]
    fn duplicated_feature_rows_score_equally() {
        let mut r = rng(26);
        let base = gaussian(&mut r, 60, 1);
        let noise = gaussian(&mut r, 60, 6) * 1e-6;
        let x = DMatrix::from_fn(60, 6, |i, j| base[(i, 0)] + noise[(i, j)]);
        let state = fit(&DataMatrix::new(x).unwrap(), &SolverConfig::new(1, 1.0)).unwrap();
        let scores = rank_features(&state).scores;
        let top = scores.iter().cloned().fold(f64::MIN, f64::max);
        let normalized: Vec<f64> = scores.iter().map(|s| s / top).collect();
        for a in &normalized {
            for b in &normalized {
                assert!((a - b).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn fit_reports_invalid_config() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.5]]).unwrap();
        assert!(matches!(
            fit(&x, &SolverConfig::new(1, 1.0).with_p(1.5)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn ranking_and_selection() {
        let r = FeatureRanking::from_scores(vec![0.9, 0.1, 0.5]);
        assert_eq!(r.order, vec![0, 2, 1]);
        assert_eq!(select_features(&r, 2).unwrap(), vec![0, 2]);
        assert_eq!(select_features(&r, 3).unwrap(), vec![0, 2, 1]);
        assert!(select_features(&r, 4).is_err());
        assert!(select_features(&r, 0).is_err());
        assert_eq!(
            FeatureRanking::from_scores(vec![0.5, 0.5]).order,
            vec![0, 1]
        );
    }

    #[test]
    fn zero_variance_features_rank_last() {
        let mut r = rng(27);
        let mut x = gaussian(&mut r, 50, 6);
        x.column_mut(1).fill(3.0);
        x.column_mut(4).fill(-1.0);
        let state = fit(&DataMatrix::new(x).unwrap(), &SolverConfig::new(2, 1.0)).unwrap();
        let ranking = rank_features(&state);
        assert_eq!(&ranking.order[4..], &[1, 4]);
    }
}
