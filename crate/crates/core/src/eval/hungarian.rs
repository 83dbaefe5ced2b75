//! Kuhn–Munkres maximum-weight perfect matching on square matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Maximum-weight perfect matching of a square non-negative matrix.
///
/// Returns `assignment` with `assignment[row] = column`. Among all optimal
/// matchings, the lexicographically smallest `assignment` is returned.
pub fn hungarian_max_match(weights: &DMatrix<f64>) -> Result<Vec<usize>> {
    if !weights.is_square() {
        return Err(Error::InvalidDimension(format!(
            "matching needs a square matrix, got {}x{}",
            weights.nrows(),
            weights.ncols()
        )));
    }
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("matching weights must be finite".into()));
    }
    let k = weights.nrows();
    if k == 0 {
        return Ok(Vec::new());
    }
    let top = weights.max();
    let cost = weights.map(|w| top - w);
    let (mut assignment, u, v) = min_cost_assignment(&cost);

    let tol = 1e-9 * top.abs().max(1.0);
    let tight = |i: usize, j: usize| cost[(i, j)] - u[i] - v[j] <= tol;
    lexicographic_refine(k, &tight, &mut assignment);
    Ok(assignment)
}

/// Sum of the matched entries.
pub fn matching_weight(weights: &DMatrix<f64>, assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(r, &c)| weights[(r, c)])
        .sum()
}

// Shortest augmenting path Hungarian method with row/column potentials.
// Returns the row->column assignment and optimal duals (u, v) with
// u[i] + v[j] <= cost[i][j], equality on matched pairs.
fn min_cost_assignment(cost: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = cost.nrows();
    // 1-based internally; index 0 is the virtual root column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[col_owner[j] - 1] = j - 1;
    }
    (assignment, u[1..].to_vec(), v[1..].to_vec())
}

// Every perfect matching inside the equality graph of an optimal dual is
// optimal, and every optimal matching lies inside it. Walk rows in order and
// pin each to the smallest tight column that still admits a perfect matching
// of the remaining rows.
fn lexicographic_refine<F>(k: usize, tight: &F, assignment: &mut [usize])
where
    F: Fn(usize, usize) -> bool,
{
    let mut owner = vec![0usize; k];
    for (r, &c) in assignment.iter().enumerate() {
        owner[c] = r;
    }
    let mut pinned_col = vec![false; k];

    for row in 0..k {
        for col in 0..k {
            if pinned_col[col] || !tight(row, col) {
                continue;
            }
            if assignment[row] == col {
                break;
            }
            // `col` is held by a later row; that row must move to some column,
            // ending at the one `row` releases.
            let released = assignment[row];
            let displaced = owner[col];
            let mut visited = vec![false; k];
            visited[col] = true;
            for (c, &p) in pinned_col.iter().enumerate() {
                if p {
                    visited[c] = true;
                }
            }
            let mut next_assignment = assignment.to_vec();
            let mut next_owner = owner.clone();
            next_assignment[row] = col;
            next_owner[col] = row;
            if reroute(
                displaced,
                released,
                tight,
                &mut visited,
                &mut next_assignment,
                &mut next_owner,
            ) {
                assignment.copy_from_slice(&next_assignment);
                owner = next_owner;
                break;
            }
        }
        pinned_col[assignment[row]] = true;
    }
}

fn reroute<F>(
    row: usize,
    target: usize,
    tight: &F,
    visited: &mut [bool],
    assignment: &mut [usize],
    owner: &mut [usize],
) -> bool
where
    F: Fn(usize, usize) -> bool,
{
    for col in 0..visited.len() {
        if visited[col] || !tight(row, col) {
            continue;
        }
        visited[col] = true;
        let ok = if col == target {
            true
        } else {
            let holder = owner[col];
            reroute(holder, target, tight, visited, assignment, owner)
        };
        if ok {
            assignment[row] = col;
            owner[col] = row;
            return true;
        }
    }
    false
}
