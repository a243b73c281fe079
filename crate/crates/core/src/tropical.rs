//! Convex bodies, lattice clouds, the tropical energy, the tropical Gibbs
//! measure and the one-dimensional real Monge-Ampere equation.
//!
//! For a convex body `P` with `0` in its interior the tropical Gibbs density
//! on `(R^n)^N` is
//!
//! ```text
//! exp( beta * max_sigma sum_i x_i . p_sigma(i) - (1 + beta) * sum_i phi_P(x_i) )
//! ```
//!
//! where `p` runs over the lattice cloud `P ∩ (Z/k)^n` and `phi_P` is the
//! support function. It is integrable exactly when `beta > -R_P`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::polybasis::{Configuration, Mode};
use crate::rng::{substream, substream2, Rng};
use crate::sampler::{mh_accept, ChainOutput, SampleSet};

const MAX_CLOUD: usize = 1_000_000;

/// A half-space `normal . y <= offset` with unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// The on-disk form of a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub n: usize,
    pub vertices: Vec<Vec<f64>>,
}

/// Convex hull of finitely many points of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexBody {
    n: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
    barycenter: Vec<f64>,
    volume: f64,
    origin_interior: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Normal of the hyperplane through `d` points of `R^d` (generalized cross product).
fn hyperplane_normal(pts: &[&Vec<f64>]) -> Vec<f64> {
    let d = pts[0].len();
    if d == 1 {
        return vec![1.0];
    }
    let rows: Vec<Vec<f64>> = pts[1..].iter().map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect()).collect();
    (0..d)
        .map(|c| {
            let m = DMatrix::from_fn(d - 1, d - 1, |i, j| rows[i][if j < c { j } else { j + 1 }]);
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            sign * m.determinant()
        })
        .collect()
}

fn combinations(n: usize, r: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..r).collect();
    if r > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = r;
        while i > 0 && idx[i - 1] == n - r + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Facets of the hull of a full-dimensional point set, with incident points.
fn hull_facets(points: &[Vec<f64>]) -> Vec<(Facet, Vec<usize>)> {
    let d = points[0].len();
    let scale = points.iter().map(|p| norm(p)).fold(1.0, f64::max);
    let tol = 1e-10 * scale;
    let mut out: Vec<(Facet, Vec<usize>)> = Vec::new();
    if d == 1 {
        let (lo, hi) = points.iter().enumerate().fold((0, 0), |(lo, hi), (i, p)| {
            (if p[0] < points[lo][0] { i } else { lo }, if p[0] > points[hi][0] { i } else { hi })
        });
        let at = |v: f64| (0..points.len()).filter(|&i| (points[i][0] - v).abs() <= tol).collect();
        out.push((Facet { normal: vec![-1.0], offset: -points[lo][0] }, at(points[lo][0])));
        out.push((Facet { normal: vec![1.0], offset: points[hi][0] }, at(points[hi][0])));
        return out;
    }
    combinations(points.len(), d, |idx| {
        let pts: Vec<&Vec<f64>> = idx.iter().map(|&i| &points[i]).collect();
        let mut a = hyperplane_normal(&pts);
        let len = norm(&a);
        if len < 1e-12 * scale.powi(d as i32 - 1) {
            return;
        }
        a.iter_mut().for_each(|v| *v /= len);
        let mut b = dot(&a, pts[0]);
        let side: Vec<f64> = points.iter().map(|p| dot(&a, p) - b).collect();
        if side.iter().all(|&s| s >= -tol) {
            a.iter_mut().for_each(|v| *v = -*v);
            b = -b;
        } else if !side.iter().all(|&s| s <= tol) {
            return;
        }
        if out.iter().any(|(f, _)| (f.offset - b).abs() <= tol && f.normal.iter().zip(&a).all(|(x, y)| (x - y).abs() <= 1e-9)) {
            return;
        }
        let incident = (0..points.len()).filter(|&i| (dot(&a, &points[i]) - b).abs() <= tol).collect();
        out.push((Facet { normal: a, offset: b }, incident));
    });
    out
}

/// Volume and centroid of the hull of a full-dimensional point set, by
/// pyramids over the facets.
fn volume_centroid(points: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let d = points[0].len();
    if d == 1 {
        let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return (hi - lo, vec![0.5 * (lo + hi)]);
    }
    let c: Vec<f64> = (0..d).map(|l| points.iter().map(|p| p[l]).sum::<f64>() / points.len() as f64).collect();
    let mut vol = 0.0;
    let mut moment = vec![0.0; d];
    for (facet, incident) in hull_facets(points) {
        let h = facet.offset - dot(&facet.normal, &c);
        // orthonormal basis of the facet's hyperplane
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for axis in 0..d {
            let mut e = vec![0.0; d];
            e[axis] = 1.0;
            let t = dot(&e, &facet.normal);
            e.iter_mut().zip(&facet.normal).for_each(|(v, nv)| *v -= t * nv);
            for b in &basis {
                let t = dot(&e, b);
                e.iter_mut().zip(b).for_each(|(v, bv)| *v -= t * bv);
            }
            let len = norm(&e);
            if len > 1e-8 && basis.len() < d - 1 {
                e.iter_mut().for_each(|v| *v /= len);
                basis.push(e);
            }
        }
        let origin = &points[incident[0]];
        let local: Vec<Vec<f64>> = incident
            .iter()
            .map(|&i| {
                let rel: Vec<f64> = points[i].iter().zip(origin).map(|(a, b)| a - b).collect();
                basis.iter().map(|b| dot(&rel, b)).collect()
            })
            .collect();
        let (area, cf_local) = volume_centroid(&local);
        let mut cf = origin.clone();
        for (b, t) in basis.iter().zip(&cf_local) {
            cf.iter_mut().zip(b).for_each(|(v, bv)| *v += t * bv);
        }
        let pv = h * area / d as f64;
        vol += pv;
        for l in 0..d {
            moment[l] += pv * (cf[l] + (c[l] - cf[l]) / (d + 1) as f64);
        }
    }
    let centroid = moment.iter().map(|m| m / vol).collect();
    (vol, centroid)
}

impl ConvexBody {
    pub fn new(n: usize, vertices: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 || vertices.is_empty() {
            return Err(Error::InvalidInput("a body needs a dimension and vertices".into()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite vertex".into()));
        }
        let facets: Vec<Facet> = hull_facets(&vertices).into_iter().map(|(f, _)| f).collect();
        if facets.len() < n + 1 {
            return Err(Error::InvalidInput("vertices do not span a full-dimensional body".into()));
        }
        let (volume, barycenter) = volume_centroid(&vertices);
        if !(volume > 0.0) {
            return Err(Error::InvalidInput("vertices do not span a full-dimensional body".into()));
        }
        let origin_interior = facets.iter().all(|f| f.offset > 1e-12);
        Ok(ConvexBody { n, vertices, facets, barycenter, volume, origin_interior })
    }

    /// The cube `[-1, 1]^n`.
    pub fn cube(n: usize) -> Self {
        let vertices = (0..1usize << n)
            .map(|m| (0..n).map(|l| if m >> l & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        ConvexBody::new(n, vertices).expect("cube")
    }

    /// The segment `[a, b]`.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::DegenerateInterval { a, b });
        }
        ConvexBody::new(1, vec![vec![a], vec![b]])
    }

    /// `{"n": 2, "vertices": [[-1, -1], [1, -1], [0, 1]]}`
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: BodySpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        ConvexBody::new(spec.n, spec.vertices)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_spec(&self) -> BodySpec {
        BodySpec { n: self.n, vertices: self.vertices.clone() }
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        ConvexBody::new(self.n, self.vertices.iter().map(|v| v.iter().map(|x| lambda * x).collect()).collect())
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn barycenter(&self) -> &[f64] {
        &self.barycenter
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn origin_interior(&self) -> bool {
        self.origin_interior
    }

    /// `phi_P(x) = max_v x . v`.
    pub fn support(&self, x: &[f64]) -> f64 {
        self.vertices.iter().map(|v| dot(v, x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership with absolute slack `tol` on every facet inequality.
    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.facets.iter().all(|f| dot(&f.normal, y) <= f.offset + tol)
    }

    /// Interval endpoints of a one-dimensional body.
    pub fn endpoints(&self) -> Result<(f64, f64)> {
        if self.n != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.n });
        }
        let lo = self.vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = self.vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }
}

/// The points of `P ∩ (Z/k)^n`, in lexicographic order of the integer coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCloud {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
}

impl LatticeCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean of the cloud.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.points.first().map_or(0, |p| p.len());
        (0..n).map(|l| self.points.iter().map(|p| p[l]).sum::<f64>() / self.len() as f64).collect()
    }
}

/// Support function (as a closure over the body) and lattice cloud of `P` at level `k`.
pub fn support_and_lattice(body: &ConvexBody, k: usize) -> Result<(impl Fn(&[f64]) -> f64 + '_, LatticeCloud)> {
    if k == 0 {
        return Err(Error::InvalidInput("lattice level k must be positive".into()));
    }
    let n = body.n;
    let kf = k as f64;
    let lo: Vec<i64> = (0..n)
        .map(|l| (body.vertices.iter().map(|v| v[l]).fold(f64::INFINITY, f64::min) * kf - 1e-9).ceil() as i64)
        .collect();
    let hi: Vec<i64> = (0..n)
        .map(|l| (body.vertices.iter().map(|v| v[l]).fold(f64::NEG_INFINITY, f64::max) * kf + 1e-9).floor() as i64)
        .collect();
    let box_count = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1).max(0) as f64).product::<f64>();
    if box_count > 20.0 * MAX_CLOUD as f64 {
        return Err(Error::CloudTooLarge { count: box_count as usize });
    }
    let mut points = Vec::new();
    let mut idx = lo.clone();
    'scan: loop {
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 / kf).collect();
        if body.contains(&p, 1e-12) {
            points.push(p);
            if points.len() > MAX_CLOUD {
                return Err(Error::CloudTooLarge { count: points.len() });
            }
        }
        // odometer with the last coordinate fastest
        let mut l = n;
        loop {
            if l == 0 {
                break 'scan;
            }
            l -= 1;
            if idx[l] < hi[l] {
                idx[l] += 1;
                idx[l + 1..n].copy_from_slice(&lo[l + 1..n]);
                break;
            }
        }
    }
    Ok((move |x: &[f64]| body.support(x), LatticeCloud { k, points }))
}

/// `R_P = |q| / |q - b_P|` where `q` is the exit point of the ray from the
/// barycenter through the origin.
pub fn r_invariant(body: &ConvexBody) -> Result<f64> {
    if !body.origin_interior {
        return Err(Error::OriginNotInterior);
    }
    let b = &body.barycenter;
    let bn = norm(b);
    if bn < 1e-14 {
        return Ok(1.0);
    }
    let dir: Vec<f64> = b.iter().map(|x| -x / bn).collect();
    let at = |t: f64| -> Vec<f64> { dir.iter().map(|d| t * d).collect() };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while body.contains(&at(hi), 0.0) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if body.contains(&at(mid), 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo / (lo + bn))
}

/// Tropical energy `(1/N) max_sigma sum_i x_i . p_sigma(i)` and the optimal
/// (lexicographically smallest) assignment `i -> sigma(i)`.
pub fn e_trop(x: &[Vec<f64>], cloud: &LatticeCloud) -> Result<(f64, Vec<usize>)> {
    let n_pts = x.len();
    if n_pts != cloud.len() {
        return Err(Error::CountMismatch { left: n_pts, right: cloud.len() });
    }
    if n_pts == 0 {
        return Err(Error::InvalidInput("empty configuration".into()));
    }
    let gain: Vec<f64> = x.iter().flat_map(|xi| cloud.points.iter().map(move |p| dot(xi, p))).collect();
    let a = assignment::maximize(&gain, n_pts)?;
    Ok((a.value / n_pts as f64, a.perm))
}

/// `max_sigma sum_i x_i p_sigma(i)` for `n = 1`, by sorting both sides.
fn max_pairing_1d(x: &mut [f64], p_sorted: &[f64]) -> f64 {
    x.sort_by(f64::total_cmp);
    x.iter().zip(p_sorted).map(|(a, b)| a * b).sum()
}

/// The unnormalized tropical Gibbs log-density of a flat configuration.
struct TropicalTarget<'a> {
    body: &'a ConvexBody,
    cloud: &'a LatticeCloud,
    p_sorted: Vec<f64>,
    beta: f64,
}

impl TropicalTarget<'_> {
    fn log_density(&self, flat: &[f64]) -> f64 {
        let n = self.body.n;
        let phi: f64 = flat.chunks(n).map(|x| self.body.support(x)).sum();
        let inter = if self.beta == 0.0 {
            0.0
        } else if n == 1 {
            max_pairing_1d(&mut flat.to_vec(), &self.p_sorted)
        } else {
            let x: Vec<Vec<f64>> = flat.chunks(n).map(|c| c.to_vec()).collect();
            let (e, _) = e_trop(&x, self.cloud).expect("sizes checked");
            e * self.cloud.len() as f64
        };
        self.beta * inter - (1.0 + self.beta) * phi
    }
}

/// Random-walk Metropolis on `(R^n)^N` with the step tuned during burn-in.
/// Proposals outside the sup-norm box of half-width `bound` are rejected.
struct Walk {
    x: Vec<f64>,
    lp: f64,
    step: f64,
}

fn walk_chain(
    target: &TropicalTarget,
    sweeps: usize,
    bound: Option<f64>,
    rng: &mut Rng,
    mut record: impl FnMut(usize, &[f64]),
) -> Result<(f64, f64)> {
    let n = target.body.n;
    let count = target.cloud.len();
    let x: Vec<f64> = (0..n * count).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
    let lp = target.log_density(&x);
    let mut w = Walk { x, lp, step: 1.0 / (count as f64).sqrt() };
    let burn_in = sweeps / 5;
    let (mut acc, mut tried) = (0usize, 0usize);
    for sweep in 0..sweeps {
        let prop: Vec<f64> = w.x.iter().map(|v| v + w.step * rng.sample::<f64, _>(StandardNormal)).collect();
        let inside = bound.is_none_or(|b| prop.iter().all(|v| v.abs() <= b));
        let lp_new = if inside { target.log_density(&prop) } else { f64::NEG_INFINITY };
        let ok = mh_accept(lp_new - w.lp, rng);
        if ok {
            w.x = prop;
            w.lp = lp_new;
        }
        if sweep < burn_in {
            let gain = (1.0 + sweep as f64).powf(-0.6);
            let alpha = if ok { 1.0 } else { 0.0 };
            w.step *= (gain * (alpha - 0.234)).exp();
        } else {
            tried += 1;
            acc += ok as usize;
            record(sweep, &w.x);
        }
    }
    Ok((acc as f64 / tried.max(1) as f64, w.step))
}

/// Samples of the tropical Gibbs measure for `beta > -R_P`, in the sampler's
/// output format (mode `RealTropical`).
pub fn tropical_gibbs(body: &ConvexBody, k: usize, beta: f64, sweeps: usize, chains: usize, seed: u64) -> Result<SampleSet> {
    let critical = -r_invariant(body)?;
    if !(beta > critical) {
        return Err(Error::BelowCritical { beta, critical });
    }
    if sweeps == 0 || chains == 0 {
        return Err(Error::InvalidInput("sweeps and chains must be positive".into()));
    }
    let (_, cloud) = support_and_lattice(body, k)?;
    if cloud.len() > 300 {
        return Err(Error::CloudTooLarge { count: cloud.len() });
    }
    let target = make_target(body, &cloud, beta);
    let n = body.n;
    let thin = (sweeps / 10_000).max(1);
    let out: Vec<Result<ChainOutput>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let mut sweeps_kept = Vec::new();
            let mut configs = Vec::new();
            let mut last = Vec::new();
            let (acceptance, step) = walk_chain(&target, sweeps, None, &mut rng, |s, x| {
                if s % thin == 0 {
                    sweeps_kept.push(s);
                    configs.push(x.to_vec());
                }
                last = x.to_vec();
            })?;
            let configs = configs
                .into_iter()
                .map(|x| Configuration::new(n, Mode::RealTropical, x.into_iter().map(|v| C64::new(v, 0.0)).collect()))
                .collect::<Result<Vec<_>>>()?;
            Ok(ChainOutput {
                chain: c,
                sweeps: sweeps_kept,
                configs,
                acceptance,
                step_mala: 0.0,
                step_rwm: step,
                final_hamiltonian: -target.log_density(&last),
            })
        })
        .collect();
    Ok(SampleSet { n, mode: Mode::RealTropical, chains: out.into_iter().collect::<Result<Vec<_>>>()? })
}

fn make_target<'a>(body: &'a ConvexBody, cloud: &'a LatticeCloud, beta: f64) -> TropicalTarget<'a> {
    let mut p_sorted: Vec<f64> = if body.n == 1 { cloud.points.iter().map(|p| p[0]).collect() } else { Vec::new() };
    p_sorted.sort_by(f64::total_cmp);
    TropicalTarget { body, cloud, p_sorted, beta }
}

/// Truncated partition masses on sup-norm balls of growing radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub beta: f64,
    pub critical: f64,
    pub radii: Vec<f64>,
    /// `Z_{R_{j+1}} / Z_{R_j}` for successive radii.
    pub ratios: Vec<f64>,
    /// Sample fraction of the larger ball falling in the smaller one.
    pub inner_fraction: Vec<f64>,
    /// Every ratio above 1.2.
    pub divergent: bool,
    /// Every ratio below 1.05.
    pub stable: bool,
}

/// Monte-Carlo estimates of `Z_{R'} / Z_R` for successive radii: the
/// reciprocal of the probability, under the measure truncated to the ball of
/// radius `R'`, of the ball of radius `R`. Runs for any `beta`.
pub fn divergence_diagnostic(
    body: &ConvexBody,
    k: usize,
    beta: f64,
    radii: &[f64],
    sweeps: usize,
    seed: u64,
) -> Result<DivergenceReport> {
    let critical = -r_invariant(body)?;
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0] && w[0] > 0.0)) {
        return Err(Error::InvalidInput("radii must be positive and increasing".into()));
    }
    let (_, cloud) = support_and_lattice(body, k)?;
    let target = make_target(body, &cloud, beta);
    let results: Vec<Result<f64>> = radii
        .windows(2)
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(j, w)| {
            let mut rng = substream2(seed, 1, j as u64);
            let (inner, outer) = (w[0], w[1]);
            let (mut inside, mut total) = (0usize, 0usize);
            walk_chain(&target, sweeps, Some(outer), &mut rng, |_, x| {
                total += 1;
                inside += x.iter().all(|v| v.abs() <= inner) as usize;
            })?;
            Ok(inside as f64 / total as f64)
        })
        .collect();
    let inner_fraction = results.into_iter().collect::<Result<Vec<_>>>()?;
    let total = (sweeps - sweeps / 5) as f64;
    // with no inner hits the ratio is only bounded below by the sample count
    let ratios: Vec<f64> = inner_fraction.iter().map(|&f| if f > 0.0 { 1.0 / f } else { total }).collect();
    Ok(DivergenceReport {
        beta,
        critical,
        radii: radii.to_vec(),
        divergent: ratios.iter().all(|&r| r > 1.2),
        stable: ratios.iter().all(|&r| r < 1.05),
        ratios,
        inner_fraction,
    })
}

/// Solution of the real Monge-Ampere equation on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMaSolution {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub beta: f64,
    /// The constant in `u'' = C e^{beta (u - phi)} e^{-phi}`; 1 unless `beta = 0`.
    pub constant: f64,
    /// Max-norm residual of the discrete equation.
    pub residual: f64,
}

impl RealMaSolution {
    /// `x,u,u'`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u,u'\n");
        for i in 0..self.x.len() {
            let _ = writeln!(out, "{},{},{}", self.x[i], self.u[i], self.du[i]);
        }
        out
    }

    /// Discrete second derivative at interior nodes.
    pub fn second_derivative(&self) -> Vec<f64> {
        second_diff(&self.x, &self.u)
    }
}

fn second_diff(x: &[f64], u: &[f64]) -> Vec<f64> {
    (1..x.len() - 1)
        .map(|i| {
            let hl = x[i] - x[i - 1];
            let hr = x[i + 1] - x[i];
            2.0 * ((u[i + 1] - u[i]) / hr - (u[i] - u[i - 1]) / hl) / (hl + hr)
        })
        .collect()
}

/// Uniform grid on `[-half_width, half_width]` with `m` cells.
pub fn ma_grid(half_width: f64, m: usize) -> Vec<f64> {
    (0..=m).map(|i| -half_width + 2.0 * half_width * i as f64 / m as f64).collect()
}

/// `u'' = C e^{beta (u - phi)} e^{-phi}` on `R` with `u'(R) = (a, b)`, where
/// `phi(x) = phi_P(x - shift)` and `P = [a, b]`, `a < 0 < b`.
///
/// For `beta = 0`, `C = (b - a) / int e^{-phi}` and the solution is explicit
/// (with `u(shift) = 0`). Otherwise `C = 1` and the equation is solved by
/// damped Newton on the finite-volume discretization with flux `a`, `b` at the
/// grid ends; the total mass `b - a` fixes the additive constant.
pub fn solve_real_ma_1d(a: f64, b: f64, beta: f64, shift: f64, grid: &[f64]) -> Result<RealMaSolution> {
    if !(a < 0.0 && 0.0 < b) {
        return Err(Error::InvalidInput(format!("need a < 0 < b, got [{a}, {b}]")));
    }
    if grid.len() < 5 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadGrid("grid must be increasing with at least 5 nodes".into()));
    }
    let body = ConvexBody::interval(a, b)?;
    let r = r_invariant(&body)?;
    let symmetric = (a + b).abs() < 1e-14;
    if beta < -r || (beta == -r && !symmetric) {
        return Err(Error::BelowCritical { beta, critical: -r });
    }
    let phi = |x: f64| (a * (x - shift)).max(b * (x - shift));
    let (x0, x1) = (grid[0], grid[grid.len() - 1]);
    if (-phi(x0)).exp() >= 1e-12 || (-phi(x1)).exp() >= 1e-12 {
        return Err(Error::GridTooShort(format!("e^(-phi) not below 1e-12 at [{x0}, {x1}]")));
    }
    let x = grid.to_vec();
    if beta == 0.0 {
        let c = (b - a) / (1.0 / -a + 1.0 / b);
        let mut u = Vec::with_capacity(x.len());
        let mut du = Vec::with_capacity(x.len());
        for &xi in &x {
            let t = xi - shift;
            if t < 0.0 {
                du.push(a + c * (-a * t).exp() / -a);
                u.push(a * t + c * ((-a * t).exp() - 1.0) / (a * a));
            } else {
                du.push(b - c * (-b * t).exp() / b);
                u.push(b * t + c * ((-b * t).exp() - 1.0) / (b * b));
            }
        }
        let sol = RealMaSolution { x, u, du, beta, constant: c, residual: 0.0 };
        return Ok(sol);
    }
    let m = x.len();
    let width: Vec<f64> = (0..m)
        .map(|i| {
            let l = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let r = if i + 1 < m { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect();
    let phis: Vec<f64> = x.iter().map(|&v| phi(v)).collect();
    let source = |i: usize, ui: f64| (beta * (ui - phis[i]) - phis[i]).exp();
    let residual = |u: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let right = if i + 1 < m { (u[i + 1] - u[i]) / (x[i + 1] - x[i]) } else { b };
                let left = if i > 0 { (u[i] - u[i - 1]) / (x[i] - x[i - 1]) } else { a };
                right - left - width[i] * source(i, u[i])
            })
            .collect()
    };
    // start from the explicit beta = 0 profile, shifted to carry mass b - a
    let mut u = solve_real_ma_1d(a, b, 0.0, shift, grid)?.u;
    let mass: f64 = (0..m).map(|i| width[i] * source(i, u[i])).sum();
    let c0 = ((b - a) / mass).ln() / beta;
    u.iter_mut().for_each(|v| *v += c0);
    let mut f = residual(&u);
    let mut fnorm = f.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let mut l2: f64 = f.iter().map(|v| v * v).sum();
    let h_min = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    // rounding floor of the flux differences
    let floor = |u: &[f64]| (16.0 * f64::EPSILON * u.iter().fold(1.0f64, |s, v| s.max(v.abs())) / h_min).max(1e-12);
    let mut iters = 0;
    while fnorm > floor(&u) {
        iters += 1;
        if iters > 200 {
            return Err(Error::SolverFailure(format!("real Monge-Ampere Newton stalled at residual {fnorm:e}")));
        }
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for i in 0..m {
            if i + 1 < m {
                let g = 1.0 / (x[i + 1] - x[i]);
                diag[i] -= g;
                upper[i] = g;
            }
            if i > 0 {
                let g = 1.0 / (x[i] - x[i - 1]);
                diag[i] -= g;
                lower[i] = g;
            }
            diag[i] -= width[i] * beta * source(i, u[i]);
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let step = solve_tridiagonal(&lower[1..], &diag, &upper, &rhs);
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure("singular Newton system".into()));
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(v, s)| v + t * s).collect();
            let ft = residual(&trial);
            let nt = ft.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let l2t: f64 = ft.iter().map(|v| v * v).sum();
            if l2t.is_finite() && (l2t <= (1.0 - 1e-4 * t) * l2 || nt <= floor(&trial)) {
                u = trial;
                f = ft;
                fnorm = nt;
                l2 = l2t;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(Error::SolverFailure(format!("line search failed at residual {fnorm:e}")));
            }
        }
    }
    let mut du = vec![0.0; m];
    du[0] = a;
    du[m - 1] = b;
    for i in 1..m - 1 {
        let hl = x[i] - x[i - 1];
        let hr = x[i + 1] - x[i];
        du[i] = ((u[i + 1] - u[i]) / hr * hl + (u[i] - u[i - 1]) / hl * hr) / (hl + hr);
    }
    let rel = (0..m).map(|i| f[i].abs() / width[i]).fold(0.0, f64::max);
    Ok(RealMaSolution { x, u, du, beta, constant: 1.0, residual: rel })
}

/// Pushforward density `e^{-phi_P} / int e^{-phi_P}` of the `beta = 0` limit on `P = [a, b]`.
pub fn beta0_density(a: f64, b: f64, x: f64) -> f64 {
    let z = 1.0 / -a + 1.0 / b;
    (-(a * x).max(b * x)).exp() / z
}

/// Distribution function of [`beta0_density`].
pub fn beta0_cdf(a: f64, b: f64, x: f64) -> f64 {
    let z = 1.0 / -a + 1.0 / b;
    if x < 0.0 {
        (-a * x).exp() / -a / z
    } else {
        (1.0 / -a + (1.0 - (-b * x).exp()) / b) / z
    }
}

/// Draws from [`beta0_density`]; used for reference samples.
pub fn beta0_sample(a: f64, b: f64, rng: &mut Rng) -> f64 {
    let left = (1.0 / -a) / (1.0 / -a + 1.0 / b);
    let e: f64 = -(1.0 - rng.random::<f64>()).ln();
    if rng.random::<f64>() < left {
        e / a
    } else {
        e / b
    }
}
