//! Discrete optimal transport for the cost `c(x, y) = -x . y` and monotone
//! maps onto segments.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::assignment;
use crate::error::{Error, Result};

/// Finitely supported probability measure on `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty measure".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::SizeMismatch { expected: points.len(), got: weights.len() });
        }
        let n = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("weights must be non-negative and points finite".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { points, weights })
    }

    /// Equal weights `1/N`.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    /// Uniform measure on real atoms.
    pub fn uniform_line(atoms: &[f64]) -> Result<Self> {
        Self::uniform(atoms.iter().map(|&x| vec![x]).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points[0].len()
    }

    fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|v| (v - w).abs() <= 1e-15)
    }
}

/// A coupling, stored as its non-zero entries in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Plan {
    pub fn row_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.rows];
        for &(i, _, v) in &self.entries {
            m[i] += v;
        }
        m
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for &(_, j, v) in &self.entries {
            m[j] += v;
        }
        m
    }

    pub fn transpose(&self) -> Plan {
        let mut entries: Vec<_> = self.entries.iter().map(|&(i, j, v)| (j, i, v)).collect();
        entries.sort_by_key(|e| (e.0, e.1));
        Plan { rows: self.cols, cols: self.rows, entries }
    }

    /// `i,j,mass`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,mass\n");
        for &(i, j, v) in &self.entries {
            let _ = writeln!(out, "{i},{j},{v}");
        }
        out
    }
}

/// Which solver produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OtSolver {
    Assignment,
    Network,
}

/// Largest side accepted by the network solver.
pub const MAX_NETWORK_SIZE: usize = 500;

fn cost_matrix(mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> Result<Vec<f64>> {
    if mu0.dimension() != mu1.dimension() {
        return Err(Error::DimensionMismatch { expected: mu0.dimension(), got: mu1.dimension() });
    }
    Ok(mu0
        .points
        .iter()
        .flat_map(|x| mu1.points.iter().map(move |y| -x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()))
        .collect())
}

/// `min int -x.y dgamma` over couplings of `mu0` and `mu1`. Equal-size
/// uniform measures go to the assignment solver, anything else to the network solver.
pub fn ot_cost(mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> Result<(f64, Plan)> {
    let solver = if mu0.len() == mu1.len() && mu0.is_uniform() && mu1.is_uniform() {
        OtSolver::Assignment
    } else {
        OtSolver::Network
    };
    ot_cost_with(mu0, mu1, solver)
}

/// [`ot_cost`] with an explicit solver choice.
pub fn ot_cost_with(mu0: &DiscreteMeasure, mu1: &DiscreteMeasure, solver: OtSolver) -> Result<(f64, Plan)> {
    let c = cost_matrix(mu0, mu1)?;
    let (m, n) = (mu0.len(), mu1.len());
    let plan = match solver {
        OtSolver::Assignment => {
            if m != n || !mu0.is_uniform() || !mu1.is_uniform() {
                return Err(Error::InvalidInput("assignment path needs equal-size uniform measures".into()));
            }
            let a = assignment::minimize(&c, n)?;
            let w = 1.0 / n as f64;
            Plan { rows: m, cols: n, entries: a.perm.iter().enumerate().map(|(i, &j)| (i, j, w)).collect() }
        }
        OtSolver::Network => {
            if m > MAX_NETWORK_SIZE || n > MAX_NETWORK_SIZE {
                return Err(Error::InvalidInput(format!("network solver is capped at {MAX_NETWORK_SIZE} atoms per side")));
            }
            network(&c, &mu0.weights, &mu1.weights)?
        }
    };
    let r0 = plan.row_marginal();
    let r1 = plan.col_marginal();
    let resid = r0
        .iter()
        .zip(&mu0.weights)
        .chain(r1.iter().zip(&mu1.weights))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if resid >= 1e-10 {
        return Err(Error::SolverFailure(format!("plan marginal residual {resid:e}")));
    }
    let cost = plan.entries.iter().map(|&(i, j, v)| v * c[i * n + j]).sum();
    Ok((cost, plan))
}

/// Successive shortest augmenting paths with node potentials on the
/// bipartite transportation network.
fn network(c: &[f64], supply: &[f64], demand: &[f64]) -> Result<Plan> {
    let (m, n) = (supply.len(), demand.len());
    let eps = 1e-14;
    let mut flow = vec![0.0; m * n];
    let mut left = supply.to_vec();
    let mut need = demand.to_vec();
    // node potentials: sources 0..m, sinks m..m+n; sinks with unmet demand
    // keep a common potential, as do sources with supply left
    let cmin = c.iter().copied().fold(f64::INFINITY, f64::min);
    let mut pot = vec![0.0; m + n];
    pot[m..].iter_mut().for_each(|p| *p = cmin);
    let mut rounds = 0;
    while left.iter().any(|&s| s > eps) {
        rounds += 1;
        if rounds > 10 * (m + n) * (m + n) {
            return Err(Error::SolverFailure("transport augmentation did not terminate".into()));
        }
        let total = m + n;
        let mut dist = vec![f64::INFINITY; total];
        let mut prev = vec![usize::MAX; total];
        let mut done = vec![false; total];
        for i in 0..m {
            if left[i] > eps {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            for v in 0..total {
                if !done[v] && dist[v] < f64::INFINITY && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < m {
                for j in 0..n {
                    let v = m + j;
                    let d = dist[u] + (c[u * n + j] + pot[u] - pot[v]).max(0.0);
                    if d < dist[v] {
                        dist[v] = d;
                        prev[v] = u;
                    }
                }
            } else {
                let j = u - m;
                for i in 0..m {
                    if flow[i * n + j] > eps {
                        let d = dist[u] + (-c[i * n + j] + pot[u] - pot[i]).max(0.0);
                        if d < dist[i] {
                            dist[i] = d;
                            prev[i] = u;
                        }
                    }
                }
            }
        }
        let target = (0..n)
            .filter(|&j| need[j] > eps && dist[m + j] < f64::INFINITY)
            .min_by(|&a, &b| dist[m + a].total_cmp(&dist[m + b]))
            .ok_or_else(|| Error::SolverFailure("no augmenting path: marginals have different mass".into()))?;
        let dt = dist[m + target];
        for v in 0..total {
            pot[v] += dist[v].min(dt);
        }
        // bottleneck along the path
        let mut amount = need[target];
        let mut v = m + target;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= m {
                amount = amount.min(flow[v * n + (u - m)]);
            }
            v = u;
        }
        amount = amount.min(left[v]);
        let origin = v;
        let mut v = m + target;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < m {
                flow[u * n + (v - m)] += amount;
            } else {
                let f = &mut flow[v * n + (u - m)];
                *f -= amount;
                if *f < eps {
                    *f = 0.0;
                }
            }
            v = u;
        }
        left[origin] -= amount;
        need[target] -= amount;
    }
    let entries = (0..m * n).filter(|&q| flow[q] > 0.0).map(|q| (q / n, q % n, flow[q])).collect();
    Ok(Plan { rows: m, cols: n, entries })
}

/// A law on the real line, given through its distribution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Law1d {
    Empirical { measure: DiscreteMeasure },
    Uniform { lo: f64, hi: f64 },
    /// Density `e^{-|x|/scale} / (2 scale)`.
    Laplace { scale: f64 },
    Gaussian { mean: f64, sigma: f64 },
}

impl Law1d {
    /// Distribution function; for empirical laws, the midpoint of the jump at an atom.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Law1d::Empirical { measure } => {
                let mut f = 0.0;
                for (p, w) in measure.points.iter().zip(&measure.weights) {
                    if p[0] < x {
                        f += w;
                    } else if p[0] == x {
                        f += 0.5 * w;
                    }
                }
                f
            }
            Law1d::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Law1d::Laplace { scale } => {
                if x < 0.0 {
                    0.5 * (x / scale).exp()
                } else {
                    1.0 - 0.5 * (-x / scale).exp()
                }
            }
            Law1d::Gaussian { mean, sigma } => Normal::new(*mean, *sigma).map(|d| d.cdf(x)).unwrap_or(f64::NAN),
        }
    }

    /// Quantile function (for empirical laws, the smallest atom reaching `q`).
    pub fn quantile(&self, q: f64) -> f64 {
        match self {
            Law1d::Empirical { measure } => {
                let mut atoms: Vec<(f64, f64)> = measure.points.iter().map(|p| p[0]).zip(measure.weights.iter().copied()).collect();
                atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                for (x, w) in &atoms {
                    acc += w;
                    if acc >= q {
                        return *x;
                    }
                }
                atoms.last().map_or(f64::NAN, |a| a.0)
            }
            Law1d::Uniform { lo, hi } => lo + q * (hi - lo),
            Law1d::Laplace { scale } => {
                if q < 0.5 {
                    scale * (2.0 * q).ln()
                } else {
                    -scale * (2.0 * (1.0 - q)).ln()
                }
            }
            Law1d::Gaussian { mean, sigma } => Normal::new(*mean, *sigma).map(|d| d.inverse_cdf(q)).unwrap_or(f64::NAN),
        }
    }
}

/// The non-decreasing map `T = a + (b - a) F_mu` pushing `mu` to the uniform
/// probability on `[a, b]` (barycentric at atoms of an empirical law).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneMap {
    pub law: Law1d,
    pub a: f64,
    pub b: f64,
}

impl MonotoneMap {
    pub fn eval(&self, x: f64) -> f64 {
        self.a + (self.b - self.a) * self.law.cdf(x)
    }

    /// `u(x) = int_{x_0}^x T` on a grid (trapezoid rule), a convex potential with `u' = T`.
    pub fn potential(&self, grid: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; grid.len()];
        for i in 1..grid.len() {
            u[i] = u[i - 1] + 0.5 * (self.eval(grid[i - 1]) + self.eval(grid[i])) * (grid[i] - grid[i - 1]);
        }
        u
    }
}

pub fn monotone_map_1d(law: Law1d, a: f64, b: f64) -> Result<MonotoneMap> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::DegenerateInterval { a, b });
    }
    if let Law1d::Empirical { measure } = &law {
        if measure.dimension() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: measure.dimension() });
        }
    }
    Ok(MonotoneMap { law, a, b })
}
