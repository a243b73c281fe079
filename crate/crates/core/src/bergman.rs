//! Weighted Gram matrices, Christoffel functions and projection determinantal
//! point processes (the `beta = k` ensembles).
//!
//! The scalar product is `<f, g> = int f conj(g) e^{-k phi} dV`. Orthonormal
//! polynomials come from the Cholesky factor of the Gram matrix, and the
//! Bergman kernel on the diagonal is `K_k(z, z) = sum_i |p_i(z)|^2`.
//!
//! On the real line the monomial Gram matrix is hopeless beyond `k ~ 20`, so
//! one-dimensional real measures start from the orthonormal polynomials of the
//! discretized measure, produced by the Stieltjes three-term recurrence.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_sub};
use crate::polybasis::{Configuration, Mode, MultiIndexBasis};
use crate::quadrature::gauss_legendre_on;
use crate::rng::substream;
use crate::weights::{BaseMeasure, Weight};

/// Largest condition number (of the diagonally scaled Gram matrix) accepted.
pub const MAX_CONDITION: f64 = 1e14;
const MAX_NODES: usize = 1 << 15;

/// The measure `dV` underlying the scalar product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSpec {
    /// Uniform probability on `|z| = radius` (trapezoid rule in the angle).
    Circle { radius: f64 },
    /// Uniform probability on `[a, b]` (Gauss-Legendre).
    Interval { a: f64, b: f64 },
    /// Arcsine probability on `[-1, 1]` (Gauss-Chebyshev).
    Arcsine,
    /// A base measure on the real line (Gauss-Legendre on a truncated range).
    Line { base: BaseMeasure },
    /// A radial base measure on `C` (polar Gauss-Legendre times trapezoid).
    Radial { base: BaseMeasure },
    /// Uniform probability on the box `[lo, hi]^n` of `R^n` (tensor Gauss-Legendre).
    Box { lo: f64, hi: f64 },
}

impl MeasureSpec {
    fn mode(&self) -> Mode {
        match self {
            MeasureSpec::Circle { .. } | MeasureSpec::Radial { .. } => Mode::Complex,
            _ => Mode::RealLine,
        }
    }

    fn one_dimensional_real(&self) -> bool {
        matches!(self, MeasureSpec::Interval { .. } | MeasureSpec::Arcsine | MeasureSpec::Line { .. })
    }
}

/// Nodes and weights with `sum_q w_q f(x_q) ~ int f dV`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec<C64>>,
    pub weights: Vec<f64>,
}

/// Range outside which `e^{-k phi} dV` times polynomials of degree `k` is negligible.
fn truncation(weight: &Weight, base: &BaseMeasure, k: usize, mode: Mode) -> Result<f64> {
    let logf = |r: f64| {
        let z = [C64::new(r, 0.0)];
        let phi = weight.value(&z);
        if phi == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        let jac = if mode == Mode::Complex { (2.0 * PI * r.max(1e-300)).ln() } else { 0.0 };
        -(k as f64) * phi + base.log_density(&z, mode) + 2.0 * k as f64 * (1.0 + r).ln() + jac
    };
    let probes: Vec<f64> = (0..2000).map(|i| 1e-3 * 1.01f64.powi(i)).collect();
    let top = probes.iter().map(|&r| logf(r).max(logf(-r))).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::InvalidInput("weighted measure vanishes identically".into()));
    }
    let last = probes.iter().rev().find(|&&r| logf(r).max(logf(-r)) > top - 80.0).copied();
    match last {
        Some(r) if r < probes[probes.len() - 1] => Ok(r * 1.05),
        _ => Err(Error::TruncationTail { tail: 1.0 }),
    }
}

fn build_rule(spec: &MeasureSpec, weight: &Weight, n: usize, k: usize, m: usize) -> Result<QuadratureRule> {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match spec {
        MeasureSpec::Circle { radius } => {
            for j in 0..m {
                nodes.push(vec![C64::from_polar(*radius, 2.0 * PI * j as f64 / m as f64)]);
                weights.push(1.0 / m as f64);
            }
        }
        MeasureSpec::Interval { a, b } => {
            let (x, w) = gauss_legendre_on(m, *a, *b);
            for (x, w) in x.into_iter().zip(w) {
                nodes.push(vec![C64::new(x, 0.0)]);
                weights.push(w / (b - a));
            }
        }
        MeasureSpec::Arcsine => {
            for j in 0..m {
                let x = -(PI * (j as f64 + 0.5) / m as f64).cos();
                nodes.push(vec![C64::new(x, 0.0)]);
                weights.push(1.0 / m as f64);
            }
        }
        MeasureSpec::Line { base } => {
            let r = truncation(weight, base, k, Mode::RealLine)?;
            let (x, w) = gauss_legendre_on(m, -r, r);
            for (x, w) in x.into_iter().zip(w) {
                let z = vec![C64::new(x, 0.0)];
                let d = base.log_density(&z, Mode::RealLine).exp();
                nodes.push(z);
                weights.push(w * d);
            }
        }
        MeasureSpec::Radial { base } => {
            if !weight.is_radial() {
                return Err(Error::InvalidInput("radial quadrature needs a radial weight".into()));
            }
            let r = truncation(weight, base, k, Mode::Complex)?;
            let (rs, wr) = gauss_legendre_on(m, 0.0, r);
            // 2k + 2 angles integrate e^{i j theta} exactly for |j| <= 2k
            let na = 2 * k + 2;
            for (rv, w) in rs.into_iter().zip(wr) {
                let d = base.log_density(&[C64::new(rv, 0.0)], Mode::Complex).exp();
                for j in 0..na {
                    nodes.push(vec![C64::from_polar(rv, 2.0 * PI * j as f64 / na as f64)]);
                    weights.push(w * rv * d * 2.0 * PI / na as f64);
                }
            }
        }
        MeasureSpec::Box { lo, hi } => {
            let (x, w) = gauss_legendre_on(m, *lo, *hi);
            let total = m.pow(n as u32);
            for idx in 0..total {
                let mut rem = idx;
                let mut z = Vec::with_capacity(n);
                let mut wt = 1.0;
                for _ in 0..n {
                    z.push(C64::new(x[rem % m], 0.0));
                    wt *= w[rem % m] / (hi - lo);
                    rem /= m;
                }
                nodes.push(z);
                weights.push(wt);
            }
        }
    }
    Ok(QuadratureRule { nodes, weights })
}

/// How the starting basis is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Native {
    Monomial(MultiIndexBasis),
    /// Orthonormal polynomials `p_{j+1} = ((x - a_j) p_j - b_j p_{j-1}) / b_{j+1}`.
    Recurrence { a: Vec<f64>, b: Vec<f64>, p0: f64 },
}

impl Native {
    fn eval(&self, z: &[C64]) -> Vec<C64> {
        match self {
            Native::Monomial(basis) => basis.evaluate(z),
            Native::Recurrence { a, b, p0 } => {
                let x = z[0];
                let n = a.len() + 1;
                let mut out = Vec::with_capacity(n);
                let mut prev = C64::new(0.0, 0.0);
                let mut cur = C64::new(*p0, 0.0);
                out.push(cur);
                for j in 0..n - 1 {
                    let bj = if j == 0 { 0.0 } else { b[j - 1] };
                    let next = ((x - a[j]) * cur - bj * prev) / b[j];
                    prev = cur;
                    cur = next;
                    out.push(cur);
                }
                out
            }
        }
    }
}

/// Discretized Stieltjes procedure on the weighted nodes.
fn stieltjes(x: &[f64], w: &[f64], size: usize) -> Result<Native> {
    let mass: f64 = w.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::SolverFailure("weighted measure has no mass".into()));
    }
    let p0 = 1.0 / mass.sqrt();
    let mut prev = vec![0.0; x.len()];
    let mut cur = vec![p0; x.len()];
    let mut a = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for j in 0..size.saturating_sub(1) {
        let aj: f64 = (0..x.len()).map(|q| w[q] * x[q] * cur[q] * cur[q]).sum();
        let bj = if j == 0 { 0.0 } else { b[j - 1] };
        let mut next: Vec<f64> = (0..x.len()).map(|q| (x[q] - aj) * cur[q] - bj * prev[q]).collect();
        let norm = (0..x.len()).map(|q| w[q] * next[q] * next[q]).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::SolverFailure("recurrence broke down: too few nodes".into()));
        }
        for v in &mut next {
            *v /= norm;
        }
        a.push(aj);
        b.push(norm);
        prev = cur;
        cur = next;
    }
    Ok(Native::Recurrence { a, b, p0 })
}

/// Gram matrix of a basis in the weighted scalar product with its Cholesky factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramFactorization {
    n: usize,
    k: usize,
    size: usize,
    pub spec: MeasureSpec,
    pub weight: Weight,
    native: Native,
    recombination: Option<Vec<C64>>,
    pub rule: QuadratureRule,
    /// Row-major Gram matrix of the (recombined) starting basis.
    pub gram: Vec<C64>,
    chol: Vec<C64>,
    /// Condition number of the diagonally scaled Gram matrix.
    pub condition: f64,
    /// `|G - L L^*| / |G|` in the max norm.
    pub residual: f64,
}

impl GramFactorization {
    /// Monomials (or, for one-dimensional real measures, the recurrence basis)
    /// of degree `<= k` in `n` variables.
    pub fn new(n: usize, k: usize, weight: Weight, spec: MeasureSpec) -> Result<Self> {
        Self::build(n, k, weight, spec, None, false)
    }

    /// Plain monomials regardless of the measure.
    pub fn monomial(n: usize, k: usize, weight: Weight, spec: MeasureSpec) -> Result<Self> {
        Self::build(n, k, weight, spec, None, true)
    }

    /// Start from `R e` for an invertible `N x N` matrix `R` (row-major).
    pub fn recombined(n: usize, k: usize, weight: Weight, spec: MeasureSpec, r: Vec<C64>) -> Result<Self> {
        Self::build(n, k, weight, spec, Some(r), true)
    }

    fn build(
        n: usize,
        k: usize,
        weight: Weight,
        spec: MeasureSpec,
        recombination: Option<Vec<C64>>,
        force_monomial: bool,
    ) -> Result<Self> {
        let basis = MultiIndexBasis::new(n, k)?;
        let size = basis.size();
        if let Some(r) = &recombination {
            if r.len() != size * size {
                return Err(Error::SizeMismatch { expected: size * size, got: r.len() });
            }
        }
        match spec {
            MeasureSpec::Box { .. } => {}
            _ if n != 1 => return Err(Error::InvalidInput("this measure lives in one variable".into())),
            _ => {}
        }
        let recurrence = spec.one_dimensional_real() && !force_monomial;
        let mut m = match spec {
            MeasureSpec::Box { .. } => k + 2,
            _ => 2 * size + 8,
        };
        let mut previous: Option<Vec<C64>> = None;
        loop {
            let rule = build_rule(&spec, &weight, n, k, m)?;
            let wk: Vec<f64> = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(z, w)| {
                    let phi = weight.value(z);
                    if phi == f64::INFINITY {
                        0.0
                    } else {
                        w * (-(k as f64) * phi).exp()
                    }
                })
                .collect();
            let native = if recurrence {
                let x: Vec<f64> = rule.nodes.iter().map(|z| z[0].re).collect();
                stieltjes(&x, &wk, size)?
            } else {
                Native::Monomial(basis.clone())
            };
            let fact = GramFactorization {
                n,
                k,
                size,
                spec: spec.clone(),
                weight: weight.clone(),
                native,
                recombination: recombination.clone(),
                rule,
                gram: Vec::new(),
                chol: Vec::new(),
                condition: 0.0,
                residual: 0.0,
            };
            let mut g = vec![C64::new(0.0, 0.0); size * size];
            for (z, &w) in fact.rule.nodes.iter().zip(&wk) {
                if w == 0.0 {
                    continue;
                }
                let e = fact.start_basis(z);
                for i in 0..size {
                    let ei = e[i] * w;
                    for j in 0..size {
                        g[i * size + j] += ei * e[j].conj();
                    }
                }
            }
            let stable = match &previous {
                Some(p) => (0..size).all(|i| {
                    (0..size).all(|j| {
                        let scale = (g[i * size + i].re * g[j * size + j].re).sqrt();
                        (g[i * size + j] - p[i * size + j]).norm() <= 1e-12 * scale
                    })
                }),
                None => matches!(spec, MeasureSpec::Circle { .. } | MeasureSpec::Arcsine) && m > 2 * size,
            };
            if stable || m >= MAX_NODES {
                return fact.finish(g);
            }
            previous = Some(g);
            m *= 2;
        }
    }

    fn finish(mut self, g: Vec<C64>) -> Result<Self> {
        let size = self.size;
        // Hermitian symmetrize away rounding
        let mut g = g;
        for i in 0..size {
            g[i * size + i] = C64::new(g[i * size + i].re, 0.0);
            for j in i + 1..size {
                let v = 0.5 * (g[i * size + j] + g[j * size + i].conj());
                g[i * size + j] = v;
                g[j * size + i] = v.conj();
            }
        }
        let d: Vec<f64> = (0..size).map(|i| g[i * size + i].re.sqrt()).collect();
        if d.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::ConditionRefused { condition: f64::INFINITY });
        }
        let scaled = DMatrix::from_fn(size, size, |i, j| g[i * size + j] / (d[i] * d[j]));
        let eig = scaled.symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        self.condition = condition;
        if condition > MAX_CONDITION {
            return Err(Error::ConditionRefused { condition });
        }
        let l = cholesky(&g, size).ok_or(Error::ConditionRefused { condition })?;
        let mut resid: f64 = 0.0;
        let mut gmax: f64 = 0.0;
        for i in 0..size {
            for j in 0..size {
                let mut s = C64::new(0.0, 0.0);
                for q in 0..=i.min(j) {
                    s += l[i * size + q] * l[j * size + q].conj();
                }
                resid = resid.max((s - g[i * size + j]).norm());
                gmax = gmax.max(g[i * size + j].norm());
            }
        }
        self.residual = resid / gmax;
        self.gram = g;
        self.chol = l;
        Ok(self)
    }

    fn start_basis(&self, z: &[C64]) -> Vec<C64> {
        let e = self.native.eval(z);
        match &self.recombination {
            None => e,
            Some(r) => (0..self.size)
                .map(|i| (0..self.size).map(|j| r[i * self.size + j] * e[j]).sum())
                .collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.spec.mode()
    }

    /// Values at `z` of the orthonormal basis `p = L^{-1} e`.
    pub fn orthonormal(&self, z: &[C64]) -> Vec<C64> {
        forward_sub(&self.chol, self.size, &self.start_basis(z))
    }

    /// Coefficients (in the starting basis) of the orthonormal basis: row `i`
    /// of `L^{-1}`.
    pub fn orthonormal_coefficients(&self) -> Vec<Vec<C64>> {
        let cols: Vec<Vec<C64>> = (0..self.size)
            .map(|j| {
                let mut e = vec![C64::new(0.0, 0.0); self.size];
                e[j] = C64::new(1.0, 0.0);
                forward_sub(&self.chol, self.size, &e)
            })
            .collect();
        (0..self.size).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
    }

    /// Starting-basis values at `z` (after any recombination).
    pub fn basis_values(&self, z: &[C64]) -> Vec<C64> {
        self.start_basis(z)
    }

    /// `K_k(z, z) = sum_i |p_i(z)|^2`.
    pub fn kernel_diagonal(&self, z: &[C64]) -> f64 {
        self.orthonormal(z).iter().map(|v| v.norm_sqr()).sum()
    }

    /// `e^{-k phi(z)}`.
    pub fn weight_factor(&self, z: &[C64]) -> f64 {
        let phi = self.weight.value(z);
        if phi == f64::INFINITY {
            0.0
        } else {
            (-(self.k as f64) * phi).exp()
        }
    }

    /// `int f e^{-k phi} dV` by the stored quadrature rule.
    pub fn integrate<F: Fn(&[C64]) -> f64>(&self, f: F) -> f64 {
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(z, w)| w * self.weight_factor(z) * f(z))
            .sum()
    }
}

/// `(K_k(z,z) e^{-k phi(z)}, (1/k) log K_k(z,z))`.
pub fn christoffel(gram: &GramFactorization, z: &[C64]) -> (f64, f64) {
    let kz = gram.kernel_diagonal(z);
    let psi = if gram.k == 0 { kz.ln() } else { kz.ln() / gram.k as f64 };
    (kz * gram.weight_factor(z), psi)
}

/// Parametrization of the one-point law used for proposals.
#[derive(Debug, Clone, Copy)]
enum Chart {
    /// `z = radius e^{it}`, `t in [0, 2pi)`, density `1/2pi`.
    Angle { radius: f64 },
    /// `x = t` on `[lo, hi]` with the measure's own density.
    Segment { lo: f64, hi: f64 },
    /// `x = -cos t`, `t in [0, pi]`, density `1/pi` (arcsine law).
    ArcsineAngle,
    /// `|z| = t in [0, r_max]` with uniform angle.
    Radius { r_max: f64 },
}

const TABLE_CELLS: usize = 1 << 14;

/// Piecewise-linear tabulation of the one-point density in the chart variable.
struct Proposal {
    chart: Chart,
    t: Vec<f64>,
    f: Vec<f64>,
    cdf: Vec<f64>,
}

impl Proposal {
    fn new(gram: &GramFactorization) -> Result<Self> {
        let chart = match &gram.spec {
            MeasureSpec::Circle { radius } => Chart::Angle { radius: *radius },
            MeasureSpec::Interval { a, b } => Chart::Segment { lo: *a, hi: *b },
            MeasureSpec::Arcsine => Chart::ArcsineAngle,
            MeasureSpec::Line { base } => {
                let r = truncation(&gram.weight, base, gram.k, Mode::RealLine)?;
                Chart::Segment { lo: -r, hi: r }
            }
            MeasureSpec::Radial { base } => Chart::Radius { r_max: truncation(&gram.weight, base, gram.k, Mode::Complex)? },
            MeasureSpec::Box { .. } => {
                return Err(Error::InvalidInput("determinantal sampling is implemented in one variable".into()));
            }
        };
        let (lo, hi) = match chart {
            Chart::Angle { .. } => (0.0, 2.0 * PI),
            Chart::Segment { lo, hi } => (lo, hi),
            Chart::ArcsineAngle => (0.0, PI),
            Chart::Radius { r_max } => (0.0, r_max),
        };
        let mut p = Proposal { chart, t: Vec::new(), f: Vec::new(), cdf: Vec::new() };
        let h = (hi - lo) / TABLE_CELLS as f64;
        p.t = (0..=TABLE_CELLS).map(|i| lo + i as f64 * h).collect();
        p.f = p.t.iter().map(|&t| p.density(gram, t)).collect();
        p.cdf = vec![0.0; TABLE_CELLS + 1];
        for i in 0..TABLE_CELLS {
            p.cdf[i + 1] = p.cdf[i] + 0.5 * (p.f[i] + p.f[i + 1]) * h;
        }
        let total = p.cdf[TABLE_CELLS];
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ProposalFailure { efficiency: 0.0 });
        }
        Ok(p)
    }

    fn point(&self, t: f64, theta: f64) -> Vec<C64> {
        match self.chart {
            Chart::Angle { radius } => vec![C64::from_polar(radius, t)],
            Chart::Segment { .. } => vec![C64::new(t, 0.0)],
            Chart::ArcsineAngle => vec![C64::new(-t.cos(), 0.0)],
            Chart::Radius { .. } => vec![C64::from_polar(t, theta)],
        }
    }

    /// Unnormalized one-point density `K e^{-k phi} dV` in the chart variable.
    fn density(&self, gram: &GramFactorization, t: f64) -> f64 {
        let z = self.point(t, 0.0);
        let jac = match (&gram.spec, self.chart) {
            (_, Chart::Angle { .. }) => 1.0 / (2.0 * PI),
            (_, Chart::ArcsineAngle) => 1.0 / PI,
            (MeasureSpec::Interval { a, b }, _) => 1.0 / (b - a),
            (MeasureSpec::Line { base }, _) => base.log_density(&z, Mode::RealLine).exp(),
            (MeasureSpec::Radial { base }, _) => 2.0 * PI * t * base.log_density(&z, Mode::Complex).exp(),
            _ => 0.0,
        };
        gram.kernel_diagonal(&z) * gram.weight_factor(&z) * jac
    }

    fn sample(&self, rng: &mut crate::rng::Rng) -> Vec<C64> {
        let total = self.cdf[TABLE_CELLS];
        let u: f64 = rng.random::<f64>() * total;
        let i = (self.cdf.partition_point(|&c| c <= u).max(1) - 1).min(TABLE_CELLS - 1);
        let h = self.t[i + 1] - self.t[i];
        let (f0, f1) = (self.f[i], self.f[i + 1]);
        let target = u - self.cdf[i];
        // solve f0 s + (f1 - f0) s^2 / (2h) = target for s in [0, h]
        let a = (f1 - f0) / (2.0 * h);
        let s = if a.abs() < 1e-300 || (a * target).abs() < 1e-14 * f0 * f0 {
            if f0 > 0.0 { target / f0 } else { 0.5 * h }
        } else {
            let disc = (f0 * f0 + 4.0 * a * target).max(0.0);
            2.0 * target / (f0 + disc.sqrt())
        };
        let theta = rng.random_range(0.0..2.0 * PI);
        self.point(self.t[i] + s.clamp(0.0, h), theta)
    }
}

/// Exact-up-to-tabulation sample of the `N_k`-point projection process with
/// kernel `K_k(x, y) e^{-k phi(x)/2 - k phi(y)/2}` against `dV`.
///
/// Points are drawn one at a time: a proposal from the one-point law
/// `K(x,x) e^{-k phi} dV / N` is accepted with probability
/// `|P v(x)|^2 / |v(x)|^2`, where `v(x)` is the vector of orthonormal
/// polynomials at `x` and `P` projects off the span of the vectors of the
/// points already chosen.
pub fn dpp_sample(gram: &GramFactorization, seed: u64) -> Result<Configuration> {
    let proposal = Proposal::new(gram)?;
    dpp_sample_with(gram, &proposal, seed)
}

/// Several independent samples sharing one tabulated proposal.
pub fn dpp_samples(gram: &GramFactorization, count: usize, seed: u64) -> Result<Vec<Configuration>> {
    use rayon::prelude::*;
    let proposal = Proposal::new(gram)?;
    (0..count)
        .into_par_iter()
        .map(|i| dpp_sample_with(gram, &proposal, crate::rng::substream2(seed, 0, i as u64).random()))
        .collect()
}

fn dpp_sample_with(gram: &GramFactorization, proposal: &Proposal, seed: u64) -> Result<Configuration> {
    let mut rng = substream(seed, 0);
    let size = gram.size;
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(size);
    let mut points = Vec::with_capacity(size);
    let (mut tries, mut accepted) = (0usize, 0usize);
    while points.len() < size {
        let z = proposal.sample(&mut rng);
        tries += 1;
        // the projection kernel pairs conj(v) against v
        let v: Vec<C64> = gram.orthonormal(&z).iter().map(|c| c.conj()).collect();
        let full: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        let mut r = v.clone();
        for e in &basis {
            let c: C64 = e.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
            for (ri, ei) in r.iter_mut().zip(e) {
                *ri -= c * ei;
            }
        }
        let rest: f64 = r.iter().map(|c| c.norm_sqr()).sum();
        let u: f64 = rng.random();
        if full > 0.0 && u * full < rest {
            // re-orthogonalize once for stability
            for e in &basis {
                let c: C64 = e.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
                for (ri, ei) in r.iter_mut().zip(e) {
                    *ri -= c * ei;
                }
            }
            let norm = r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            basis.push(r.iter().map(|c| c / norm).collect());
            points.push(z);
            accepted += 1;
        }
        if tries >= 1_000_000 && (accepted as f64) < 1e-6 * tries as f64 {
            return Err(Error::ProposalFailure { efficiency: accepted as f64 / tries as f64 });
        }
    }
    let coords: Vec<C64> = points.into_iter().flatten().collect();
    Configuration::new(1, gram.mode(), coords)
}

/// One row of the Bernstein-Markov table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinMarkovRow {
    pub k: usize,
    /// `sup_x N_k^{-1} K_k(x,x) e^{-k phi(x)}` over the carrier grid.
    pub sup_rho: f64,
    /// Least-squares slope of `log sup rho` against `k` over the rows so far.
    pub exponent: f64,
}

/// `rho_k = N_k^{-1} K_k e^{-k phi}` (density of the one-point law against
/// `dV`) on a grid, for each `k`.
pub fn bergman_density(gram: &GramFactorization, grid: &[Vec<C64>]) -> Vec<f64> {
    grid.iter()
        .map(|z| gram.kernel_diagonal(z) * gram.weight_factor(z) / gram.size as f64)
        .collect()
}

/// Growth of `sup rho_k` along `k_list`; sub-exponential growth (fitted
/// exponent below 0.05 per unit `k`) is the polynomial Bernstein-Markov
/// property on the carrier.
pub fn bernstein_markov_diag(
    weight: &Weight,
    spec: &MeasureSpec,
    grid: &[Vec<C64>],
    k_list: &[usize],
) -> Result<(Vec<BernsteinMarkovRow>, bool)> {
    let mut rows = Vec::new();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for &k in k_list {
        let gram = GramFactorization::new(1, k, weight.clone(), spec.clone())?;
        let sup = bergman_density(&gram, grid).into_iter().fold(0.0, f64::max);
        pts.push((k as f64, sup.ln()));
        let exponent = slope(&pts);
        rows.push(BernsteinMarkovRow { k, sup_rho: sup, exponent });
    }
    let ok = rows.last().is_none_or(|r| r.exponent < 0.05);
    Ok((rows, ok))
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// CSV with columns `point,value` (real part of one-variable grid points).
pub fn profile_to_csv(grid: &[Vec<C64>], values: &[f64]) -> String {
    let mut out = String::from("point,value\n");
    for (z, v) in grid.iter().zip(values) {
        let _ = writeln!(out, "{},{}", z[0].re, v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_kernel_is_a_geometric_sum() {
        let k = 16;
        let g = GramFactorization::new(1, k, Weight::zero(), MeasureSpec::Circle { radius: 1.0 }).unwrap();
        assert!(g.residual < 1e-10 && g.condition < 1.0 + 1e-10);
        for r in [0.3, 1.0, 1.7] {
            let z = [C64::new(r, 0.0)];
            let want: f64 = (0..=k).map(|j| r.powi(2 * j as i32)).sum();
            assert!((g.kernel_diagonal(&z) / want - 1.0).abs() < 1e-12);
        }
        let (kz, _) = christoffel(&g, &[C64::new(0.0, 0.0)]);
        assert!((kz - 1.0 / g.gram[0].re).abs() < 1e-12);
    }

    #[test]
    fn recurrence_basis_on_the_interval() {
        // Legendre: sum_j (2j+1) P_j(1)^2 = (k+1)^2 for the uniform probability on [-1, 1]
        let k = 30;
        let g = GramFactorization::new(1, k, Weight::zero(), MeasureSpec::Interval { a: -1.0, b: 1.0 }).unwrap();
        let kz = g.kernel_diagonal(&[C64::new(1.0, 0.0)]);
        assert!((kz / ((k + 1) * (k + 1)) as f64 - 1.0).abs() < 1e-10, "{kz}");
        let trace = g.integrate(|z| g.kernel_diagonal(z));
        assert!((trace - (k + 1) as f64).abs() < 1e-9);
    }

    #[test]
    fn arcsine_density_is_bounded() {
        let grid: Vec<Vec<C64>> = (0..=200).map(|i| vec![C64::new(-1.0 + i as f64 / 100.0, 0.0)]).collect();
        let (rows, ok) = bernstein_markov_diag(&Weight::zero(), &MeasureSpec::Arcsine, &grid, &[4, 8, 16, 32, 64]).unwrap();
        assert!(ok, "{rows:?}");
        assert!(rows.iter().all(|r| r.sup_rho <= 2.0 + 1e-9));
    }

    #[test]
    fn single_point_process() {
        let g = GramFactorization::new(1, 0, Weight::zero(), MeasureSpec::Interval { a: 0.0, b: 2.0 }).unwrap();
        let c = dpp_sample(&g, 4).unwrap();
        assert_eq!(c.len(), 1);
        let x = c.point(0)[0].re;
        assert!((0.0..=2.0).contains(&x));
    }
}
