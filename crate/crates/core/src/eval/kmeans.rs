//! Lloyd's k-means with greedy k-means++ seeding.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabelVector;
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

pub const DEFAULT_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: LabelVector,
    /// `k x d`, one centroid per row.
    pub centroids: DMatrix<f64>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub n_iters: usize,
    /// Inertia after the initial assignment and after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

struct Points {
    data: Vec<f64>,
    d: usize,
}

impl Points {
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    fn len(&self) -> usize {
        self.data.len() / self.d
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Clusters the rows of `x` into `k` groups. Deterministic for fixed `(x, k, seed)`.
pub fn kmeans(x: &DataMatrix, k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult> {
    let n = x.n_samples();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cluster count k must lie in [1, {n}], got {k}"
        )));
    }
    let m = x.as_matrix();
    let d = m.ncols();
    let points = Points {
        data: (0..n)
            .flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>())
            .collect(),
        d,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(&points, k, &mut rng);
    let (mut labels, mut inertia) = assign(&points, &centroids, k, None);
    let mut trace = vec![inertia];
    let mut n_iters = 0;

    while n_iters < max_iters {
        n_iters += 1;
        update_centroids(&points, &mut labels, &mut centroids, k);
        let (next, next_inertia) = assign(&points, &centroids, k, Some(&labels));
        trace.push(next_inertia);
        inertia = next_inertia;
        let stable = next == labels;
        labels = next;
        if stable {
            break;
        }
    }

    Ok(KMeansResult {
        assignments: LabelVector::with_k(labels, k)?,
        centroids: DMatrix::from_row_slice(k, d, &centroids),
        inertia,
        n_iters,
        inertia_trace: trace,
    })
}

// Greedy k-means++: each new center is the best of several D²-weighted candidates,
// judged by the resulting potential.
fn plus_plus_init(points: &Points, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut dist: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), points.row(chosen[0])))
        .collect();

    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut best: Option<(usize, f64, Vec<f64>)> = None;
            for _ in 0..trials {
                let cand = sample_weighted(&dist, total, rng);
                let updated: Vec<f64> = dist
                    .iter()
                    .enumerate()
                    .map(|(i, &di)| di.min(sq_dist(points.row(i), points.row(cand))))
                    .collect();
                let potential: f64 = updated.iter().sum();
                if best.as_ref().is_none_or(|b| potential < b.1) {
                    best = Some((cand, potential, updated));
                }
            }
            let (cand, _, updated) = best.expect("at least two trials");
            dist = updated;
            cand
        } else {
            // all remaining points coincide with a chosen centroid
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
    }
    chosen
        .iter()
        .flat_map(|&i| points.row(i).to_vec())
        .collect()
}

fn sample_weighted(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if w > 0.0 && acc > target {
            return i;
        }
    }
    // rounding can leave `target` past the final partial sum
    weights.iter().rposition(|&w| w > 0.0).unwrap()
}

// Nearest centroid per point. Ties keep the previous label when it is among the
// nearest, otherwise go to the lowest centroid index.
fn assign(
    points: &Points,
    centroids: &[f64],
    k: usize,
    prev: Option<&[usize]>,
) -> (Vec<usize>, f64) {
    let d = points.d;
    let mut inertia = 0.0;
    let labels = (0..points.len())
        .map(|i| {
            let p = points.row(i);
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                let dist = sq_dist(p, &centroids[c * d..(c + 1) * d]);
                if dist < best.1 {
                    best = (c, dist);
                }
            }
            if let Some(prev) = prev {
                let c = prev[i];
                let dist = sq_dist(p, &centroids[c * d..(c + 1) * d]);
                if dist <= best.1 {
                    best = (c, dist);
                }
            }
            inertia += best.1;
            best.0
        })
        .collect();
    (labels, inertia)
}

fn means(points: &Points, labels: &[usize], k: usize) -> (Vec<f64>, Vec<usize>) {
    let d = points.d;
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(points.row(i)) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            sums[c * d..(c + 1) * d].iter_mut().for_each(|s| *s *= inv);
        }
    }
    (sums, counts)
}

// Centroids become cluster means. An empty cluster takes over the point farthest
// from its own centroid (drawn from clusters with at least two members).
fn update_centroids(points: &Points, labels: &mut [usize], centroids: &mut Vec<f64>, k: usize) {
    let d = points.d;
    let (mut next, mut counts) = means(points, labels, k);
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| {
                let l = labels[i];
                (i, sq_dist(points.row(i), &next[l * d..(l + 1) * d]))
            })
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
            .map(|(i, _)| i)
            .expect("k <= n leaves a cluster with two or more points");
        labels[far] = empty;
        let recomputed = means(points, labels, k);
        next = recomputed.0;
        counts = recomputed.1;
    }
    *centroids = next;
}
