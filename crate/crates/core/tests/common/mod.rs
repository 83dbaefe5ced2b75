#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spcafs::SymmetricMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// Orthonormal `d x m` frame from QR of a Gaussian matrix.
pub fn random_frame(rng: &mut impl Rng, d: usize, m: usize) -> DMatrix<f64> {
    let q = gaussian(rng, d, m).qr().q();
    q.columns(0, m).into_owned()
}

pub fn projector(w: &DMatrix<f64>) -> DMatrix<f64> {
    w * w.transpose()
}

/// `Q diag(values) Qᵀ` for a random orthogonal `Q`, returned with `Q`.
pub fn with_spectrum(rng: &mut impl Rng, values: &[f64]) -> (SymmetricMatrix, DMatrix<f64>) {
    let d = values.len();
    let q = random_frame(rng, d, d);
    let a =
        &q * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)) * q.transpose();
    (SymmetricMatrix::new(a).unwrap(), q)
}
