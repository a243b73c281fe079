//! Dense linear assignment (shortest augmenting paths with potentials).

use crate::error::{Error, Result};

/// An optimal assignment: row `i` goes to column `perm[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub value: f64,
}

/// Minimizes `sum_i cost[i][perm[i]]` over permutations of a square
/// row-major matrix. Among optimal permutations the lexicographically
/// smallest is returned.
pub fn minimize(cost: &[f64], n: usize) -> Result<Assignment> {
    if cost.len() != n * n {
        return Err(Error::SizeMismatch { expected: n * n, got: cost.len() });
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("non-finite assignment cost".into()));
    }
    if n == 0 {
        return Ok(Assignment { perm: Vec::new(), value: 0.0 });
    }
    let a = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    let scale = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-12 * scale * n as f64;
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| cost[i * n + j] - u[i + 1] - v[j + 1] <= tol).collect())
        .collect();
    lexicographic(&tight, &mut row_to_col);
    let value = (0..n).map(|i| cost[i * n + row_to_col[i]]).sum();
    Ok(Assignment { perm: row_to_col, value })
}

/// Maximizes instead of minimizing.
pub fn maximize(gain: &[f64], n: usize) -> Result<Assignment> {
    let neg: Vec<f64> = gain.iter().map(|g| -g).collect();
    let mut a = minimize(&neg, n)?;
    a.value = -a.value;
    Ok(a)
}

/// Moves a perfect matching of the tight graph to the lexicographically
/// smallest one, row by row.
fn lexicographic(tight: &[Vec<usize>], m: &mut [usize]) {
    let n = m.len();
    let mut owner = vec![0usize; n];
    for (i, &j) in m.iter().enumerate() {
        owner[j] = i;
    }
    for i in 0..n {
        for &j in &tight[i] {
            if j >= m[i] {
                break;
            }
            let holder = owner[j];
            if holder < i {
                continue;
            }
            let target = m[i];
            let mut seen = vec![false; n];
            seen[j] = true;
            let mut path = Vec::new();
            if augment(tight, m, &owner, holder, target, i, &mut seen, &mut path) {
                for &(r, c) in &path {
                    m[r] = c;
                    owner[c] = r;
                }
                m[i] = j;
                owner[j] = i;
                break;
            }
        }
    }
}

/// Finds an alternating path from `row` to the free column `target` using
/// only rows after `fixed`.
#[allow(clippy::too_many_arguments)]
fn augment(
    tight: &[Vec<usize>],
    m: &[usize],
    owner: &[usize],
    row: usize,
    target: usize,
    fixed: usize,
    seen: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    for &c in &tight[row] {
        if seen[c] {
            continue;
        }
        seen[c] = true;
        if c == target {
            path.push((row, c));
            return true;
        }
        let next = owner[c];
        if next > fixed && c != m[row] && augment(tight, m, owner, next, target, fixed, seen, path) {
            path.push((row, c));
            return true;
        }
    }
    false
}
