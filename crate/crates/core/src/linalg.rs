//! Dense symmetric linear algebra and the row-norm machinery the solver is built on.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Sample-by-feature data matrix: `n` rows (samples), `d` columns (features).
///
/// Construction guarantees `n >= 2`, `d >= 1` and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::InvalidDimension(format!(
                "data matrix needs at least 2 samples, got {}",
                values.nrows()
            )));
        }
        if values.ncols() < 1 {
            return Err(Error::InvalidDimension(
                "data matrix needs at least 1 feature".into(),
            ));
        }
        if let Some((idx, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (row, col) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::InvalidData(format!(
                "non-finite entry {v} at sample {row}, feature {col}"
            )));
        }
        Ok(Self(values))
    }

    /// Builds a matrix from row slices, each row one sample.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidDimension(format!(
                "row {i} has {} entries, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n_samples(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Restricts the matrix to the given feature columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidParameter(
                "feature subset must not be empty".into(),
            ));
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.n_features()) {
            return Err(Error::InvalidDimension(format!(
                "feature index {bad} out of range for {} features",
                self.n_features()
            )));
        }
        Ok(Self(self.0.select_columns(columns)))
    }

    /// Per-feature arithmetic means.
    pub fn column_means(&self) -> DVector<f64> {
        let n = self.n_samples() as f64;
        DVector::from_iterator(self.n_features(), self.0.column_iter().map(|c| c.sum() / n))
    }
}

/// Square symmetric matrix. The input is symmetrized as `(A + Aᵀ)/2` on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::InvalidDimension(format!(
                "symmetric matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let sym = (&values + values.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Full spectral decomposition with eigenvalues ascending.
///
/// Column `j` of `eigenvectors` pairs with `eigenvalues[j]`. Each eigenvector is
/// oriented so that its entry of largest magnitude (lowest index on ties) is
/// non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

/// `I_n - (1/n) 1 1ᵀ`.
pub fn centering_matrix(n: usize) -> Result<SymmetricMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "centering matrix size must be positive".into(),
        ));
    }
    let inv = 1.0 / n as f64;
    Ok(SymmetricMatrix(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 - inv
        } else {
            -inv
        }
    })))
}

/// Total scatter matrix `XᵀHX`, computed from column-centered data without forming `H`.
pub fn scatter_matrix(x: &DataMatrix) -> SymmetricMatrix {
    let means = x.column_means();
    let mut centered = x.as_matrix().clone();
    for (mut col, mean) in centered.column_iter_mut().zip(means.iter()) {
        col.add_scalar_mut(-mean);
    }
    let st = centered.transpose() * &centered;
    SymmetricMatrix((&st + st.transpose()) * 0.5)
}

/// Euclidean norm of every row.
pub fn row_norms(m: &DMatrix<f64>) -> Vec<f64> {
    m.row_iter().map(|r| r.norm()).collect()
}

/// `Σ_i (‖mⁱ‖² + eps)^{p/2}`: the p-th power of the (smoothed) ℓ2,p norm.
pub fn l2p_norm_pow(m: &DMatrix<f64>, p: f64, eps: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "smoothing constant must be finite and non-negative, got {eps}"
        )));
    }
    Ok(m.row_iter()
        .map(|r| (r.norm_squared() + eps).powf(p / 2.0))
        .sum())
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "sparsity exponent p must lie in (0, 1], got {p}"
        )))
    }
}

/// Complete eigendecomposition of a symmetric matrix, sorted ascending.
pub fn symmetric_eigen(a: &SymmetricMatrix) -> Result<EigenPairs> {
    let m = a.as_matrix();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData(
            "matrix passed to eigensolver has non-finite entries".into(),
        ));
    }
    let d = m.nrows();
    let eig =
        SymmetricEigen::try_new(m.clone(), f64::EPSILON, 1000 * d.max(10)).ok_or_else(|| {
            Error::Numeric {
                iteration: 0,
                message: format!("symmetric eigensolver did not converge for {d}x{d} matrix"),
            }
        })?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .total_cmp(&eig.eigenvalues[j])
            .then(i.cmp(&j))
    });

    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        orient(&mut v);
        eigenvectors.set_column(dst, &v);
    }
    Ok(EigenPairs {
        eigenvalues,
        eigenvectors,
    })
}

// Largest-magnitude entry non-negative; first index wins ties.
fn orient(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Eigenvectors of the `m` smallest eigenvalues, as the columns of a `d x m` matrix.
pub fn smallest_m_eigenvectors(a: &SymmetricMatrix, m: usize) -> Result<DMatrix<f64>> {
    if m == 0 || m > a.dim() {
        return Err(Error::InvalidDimension(format!(
            "requested {m} eigenvectors from a {0}x{0} matrix",
            a.dim()
        )));
    }
    let pairs = symmetric_eigen(a)?;
    Ok(pairs.eigenvectors.columns(0, m).into_owned())
}

#[cfg(test)]
pub(crate) mod test_util {
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
    }

    pub fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let a = gaussian(rng, d, d);
        (&a + a.transpose()) * 0.5
    }

    /// Gaussian matrix orthonormalized by modified Gram-Schmidt.
    pub fn random_orthonormal(rng: &mut ChaCha8Rng, d: usize, m: usize) -> DMatrix<f64> {
        let mut q = gaussian(rng, d, m);
        for j in 0..m {
            for k in 0..j {
                let proj = q.column(j).dot(&q.column(k));
                let qk = q.column(k).into_owned();
                q.column_mut(j).axpy(-proj, &qk, 1.0);
            }
            let norm = q.column(j).norm();
            q.column_mut(j).unscale_mut(norm);
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::test_util::*;
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn frob(m: &DMatrix<f64>) -> f64 {
        m.norm()
    }

    #[test]
    fn centering_small_cases() {
        let h2 = centering_matrix(2).unwrap();
        assert_eq!(
            h2.as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5])
        );
        assert_eq!(centering_matrix(1).unwrap().as_matrix()[(0, 0)], 0.0);
        let h3 = centering_matrix(3).unwrap();
        let expected = DMatrix::identity(3, 3) - DMatrix::from_element(3, 3, 1.0 / 3.0);
        assert_abs_diff_eq!(h3.as_matrix(), &expected, epsilon = 1e-15);
        let sq = h3.as_matrix() * h3.as_matrix();
        assert_abs_diff_eq!(&sq, h3.as_matrix(), epsilon = 1e-12);
        assert!(matches!(
            centering_matrix(0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn centering_idempotent_with_zero_row_sums() {
        for n in 1..=50 {
            let h = centering_matrix(n).unwrap().into_matrix();
            let sq = &h * &h;
            assert!((&sq - &h).amax() <= 1e-12, "n={n}");
            for r in h.row_iter() {
                assert!(r.sum().abs() <= 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn scatter_hand_cases() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(
            scatter_matrix(&x).as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0])
        );
        let x = DataMatrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(scatter_matrix(&x).as_matrix()[(0, 0)], 2.0);
    }

    #[test]
    fn scatter_matches_explicit_centering_oracle() {
        let mut r = rng(11);
        let x = gaussian(&mut r, 10, 4);
        let oracle = x.transpose() * centering_matrix(10).unwrap().as_matrix() * &x;
        let st = scatter_matrix(&DataMatrix::new(x).unwrap());
        assert!((st.as_matrix() - oracle).amax() <= 1e-10);
    }

    #[test]
    fn scatter_is_psd() {
        let mut r = rng(12);
        for _ in 0..20 {
            let x = gaussian(&mut r, 7, 12);
            let st = scatter_matrix(&DataMatrix::new(x).unwrap());
            let eig = symmetric_eigen(&st).unwrap();
            let tol = 1e-8 * frob(st.as_matrix());
            assert!(eig.eigenvalues.iter().all(|&l| l >= -tol));
        }
    }

    #[test]
    fn data_matrix_rejects_bad_input() {
        assert!(DataMatrix::from_rows(&[vec![1.0]]).is_err());
        assert!(matches!(
            DataMatrix::from_rows(&[vec![1.0], vec![f64::NAN]]),
            Err(Error::InvalidData(_))
        ));
        assert!(DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn l2p_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]);
        assert_eq!(l2p_norm_pow(&m, 1.0, 0.0).unwrap(), 5.0);
        assert_eq!(
            l2p_norm_pow(&DMatrix::identity(2, 2), 1.0, 0.0).unwrap(),
            2.0
        );
        assert_abs_diff_eq!(
            l2p_norm_pow(&m, 0.5, 0.0).unwrap(),
            2.236_067_977_499_79,
            epsilon = 1e-12
        );
        for p in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                l2p_norm_pow(&m, p, 0.0),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    proptest! {
        #[test]
        fn l2p_scaling_and_p1_identity(
            vals in proptest::collection::vec(-10.0f64..10.0, 12),
            c in -5.0f64..5.0,
            p in 0.05f64..=1.0,
        ) {
            let m = DMatrix::from_row_slice(4, 3, &vals);
            let sum_norms: f64 = row_norms(&m).iter().sum();
            let l1 = l2p_norm_pow(&m, 1.0, 0.0).unwrap();
            prop_assert!((l1 - sum_norms).abs() <= 1e-12 * (1.0 + sum_norms));
            let base = l2p_norm_pow(&m, p, 0.0).unwrap();
            let scaled = l2p_norm_pow(&(&m * c), p, 0.0).unwrap();
            let expected = c.abs().powf(p) * base;
            prop_assert!((scaled - expected).abs() <= 1e-10 * expected.abs().max(1e-300));
        }
    }

    #[test]
    fn eigen_diagonal() {
        let a = SymmetricMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let e = symmetric_eigen(&a).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[2], 3.0, epsilon = 1e-14);
        let expected = DMatrix::from_row_slice(3, 3, &[0., 0., 1., 1., 0., 0., 0., 1., 0.]);
        assert_abs_diff_eq!(e.eigenvectors, expected, epsilon = 1e-14);
    }

    #[test]
    fn eigen_swap_matrix_sign_convention() {
        let a = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let e = symmetric_eigen(&a).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(e.eigenvectors[(0, 0)], s, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvectors[(1, 0)], -s, epsilon = 1e-14);
    }

    #[test]
    fn eigen_residual_orthonormality_reconstruction() {
        let mut r = rng(13);
        for d in [1, 2, 5, 8, 17] {
            let a = SymmetricMatrix::new(random_symmetric(&mut r, d)).unwrap();
            let e = symmetric_eigen(&a).unwrap();
            let am = a.as_matrix();
            let scale = frob(am).max(1.0);
            for j in 0..d {
                let v = e.eigenvectors.column(j);
                let res = am * v - v * e.eigenvalues[j];
                assert!(res.norm() <= 1e-8 * scale);
                let big = v.iamax();
                assert!(v[big] >= 0.0);
            }
            let vtv = e.eigenvectors.transpose() * &e.eigenvectors;
            assert!((vtv - DMatrix::identity(d, d)).amax() <= 1e-8);
            assert!(e.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
            let recon = &e.eigenvectors
                * DMatrix::from_diagonal(&e.eigenvalues)
                * e.eigenvectors.transpose();
            assert!(frob(&(am - recon)) <= 1e-8 * scale);
        }
    }

    #[test]
    fn eigen_is_deterministic_and_rejects_nan() {
        let mut r = rng(14);
        let a = SymmetricMatrix::new(random_symmetric(&mut r, 6)).unwrap();
        assert_eq!(symmetric_eigen(&a).unwrap(), symmetric_eigen(&a).unwrap());
        let mut bad = DMatrix::identity(2, 2);
        bad[(0, 1)] = f64::INFINITY;
        let bad = SymmetricMatrix(bad);
        assert!(matches!(symmetric_eigen(&bad), Err(Error::InvalidData(_))));
    }

    #[test]
    fn repeated_eigenvalues_span_the_right_subspace() {
        // diag(1,1,5): any basis of span{e1,e2} is acceptable, so compare projectors.
        let a = SymmetricMatrix::from_diagonal(&[1.0, 5.0, 1.0]);
        let w = smallest_m_eigenvectors(&a, 2).unwrap();
        let proj = &w * w.transpose();
        let expected = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 0.0, 1.0]));
        assert!((proj - expected).amax() <= 1e-12);
    }

    #[test]
    fn smallest_eigenvectors_examples() {
        let a = SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let w = smallest_m_eigenvectors(&a, 2).unwrap();
        assert_abs_diff_eq!(
            (w.transpose() * a.as_matrix() * &w).trace(),
            3.0,
            epsilon = 1e-12
        );
        let w = smallest_m_eigenvectors(&a, 3).unwrap();
        assert_abs_diff_eq!(
            (w.transpose() * a.as_matrix() * &w).trace(),
            6.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            smallest_m_eigenvectors(&a, 4),
            Err(Error::InvalidDimension(_))
        ));
        assert!(smallest_m_eigenvectors(&a, 0).is_err());
    }

    #[test]
    fn smallest_eigenvectors_beat_random_orthonormal_frames() {
        let mut r = rng(15);
        let a = SymmetricMatrix::new(random_symmetric(&mut r, 6)).unwrap();
        let w = smallest_m_eigenvectors(&a, 2).unwrap();
        let wtw = w.transpose() * &w;
        assert!((wtw - DMatrix::identity(2, 2)).amax() <= 1e-8);
        let best = (w.transpose() * a.as_matrix() * &w).trace();
        for _ in 0..100 {
            let q = random_orthonormal(&mut r, 6, 2);
            let val = (q.transpose() * a.as_matrix() * &q).trace();
            assert!(best <= val + 1e-12);
        }
    }

    #[test]
    fn symmetric_construction_symmetrizes() {
        let s = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 1.0])).unwrap();
        assert_eq!(s.as_matrix()[(0, 1)], 3.0);
        assert_eq!(s.as_matrix()[(1, 0)], 3.0);
        assert!(SymmetricMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }
}
