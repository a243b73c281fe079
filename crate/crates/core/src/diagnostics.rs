//! Empirical measures, Wasserstein distances, relative entropy and
//! brute-force partition functions.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::EnsembleModel;
use crate::equilibrium::{ClosedFormMeasure, RadialProfile};
use crate::error::{Error, Result};
use crate::polybasis::Mode;
use crate::quadrature::{adaptive_simpson, gauss_legendre_on};
use crate::weights::{BaseKind, BaseMeasure, Domain};

/// Uniform empirical measure `(1/N) sum delta_{x_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EmpiricalMeasure {
    /// Atoms on the real line.
    Line(Vec<f64>),
    /// Atoms in the complex plane.
    Planar(Vec<C64>),
}

impl EmpiricalMeasure {
    pub fn line(atoms: Vec<f64>) -> Self {
        EmpiricalMeasure::Line(atoms)
    }

    pub fn planar(atoms: Vec<C64>) -> Self {
        EmpiricalMeasure::Planar(atoms)
    }

    /// One-variable points as produced by the samplers.
    pub fn from_points(points: &[Vec<C64>], mode: Mode) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.len() != 1) {
            return Err(Error::DimensionMismatch { expected: 1, got: p.len() });
        }
        Ok(match mode {
            Mode::Complex => EmpiricalMeasure::Planar(points.iter().map(|p| p[0]).collect()),
            _ => EmpiricalMeasure::Line(points.iter().map(|p| p[0].re).collect()),
        })
    }

    pub fn len(&self) -> usize {
        match self {
            EmpiricalMeasure::Line(v) => v.len(),
            EmpiricalMeasure::Planar(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorted radii `|z|` (absolute values on the line).
    pub fn radii(&self) -> Vec<f64> {
        let mut r: Vec<f64> = match self {
            EmpiricalMeasure::Line(v) => v.iter().map(|x| x.abs()).collect(),
            EmpiricalMeasure::Planar(v) => v.iter().map(|z| z.norm()).collect(),
        };
        r.sort_by(f64::total_cmp);
        r
    }

    /// `(1/N) sum |x_i|^p`.
    pub fn moment(&self, p: i32) -> f64 {
        let r = self.radii();
        r.iter().map(|v| v.powi(p)).sum::<f64>() / r.len() as f64
    }

    fn sorted_line(&self) -> Option<Vec<f64>> {
        match self {
            EmpiricalMeasure::Line(v) => {
                let mut v = v.clone();
                v.sort_by(f64::total_cmp);
                Some(v)
            }
            EmpiricalMeasure::Planar(_) => None,
        }
    }
}

/// What an empirical measure is compared against.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    ClosedForm(&'a ClosedFormMeasure),
    Empirical(&'a EmpiricalMeasure),
    /// Monge-Ampere measure of a radial potential, compared on radii.
    Radial(&'a RadialProfile),
    /// Uniform law on the circle `|z| = radius`, compared on angles.
    UniformCircle { radius: f64 },
}

/// `int |F - G|` for sorted atoms (CDF `F`) against a continuous CDF `g` on
/// `[lo, hi]`, with `knots` where `g` may fail to be smooth.
fn w1_against_cdf<G: Fn(f64) -> f64>(atoms: &[f64], g: &G, lo: f64, hi: f64, knots: &[f64]) -> f64 {
    let n = atoms.len() as f64;
    let lo = lo.min(atoms[0]);
    let hi = hi.max(atoms[atoms.len() - 1]);
    let mut breaks: Vec<f64> = atoms.iter().chain(knots).copied().filter(|x| *x > lo && *x < hi).collect();
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let c = atoms.partition_point(|&x| x <= mid) as f64 / n;
        // split where g crosses the level c (g is monotone)
        let (mut l, mut r) = (a, b);
        let ga = g(a) - c;
        let gb = g(b) - c;
        let pieces = if ga < 0.0 && gb > 0.0 {
            for _ in 0..100 {
                let m = 0.5 * (l + r);
                if g(m) < c {
                    l = m;
                } else {
                    r = m;
                }
            }
            vec![(a, 0.5 * (l + r)), (0.5 * (l + r), b)]
        } else {
            vec![(a, b)]
        };
        for (p, q) in pieces {
            let tol = 1e-13 * (q - p).max(1e-300);
            let integral = adaptive_simpson(&|x| g(x) - c, p, q, tol);
            total += integral.abs();
        }
    }
    total
}

fn w1_empirical_1d(a: &[f64], b: &[f64]) -> f64 {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut total = 0.0;
    for w in all.windows(2) {
        let fa = a.partition_point(|&x| x <= w[0]) as f64 / na;
        let fb = b.partition_point(|&x| x <= w[0]) as f64 / nb;
        total += (fa - fb).abs() * (w[1] - w[0]);
    }
    total
}

const SLICES: usize = 64;

/// Sliced Wasserstein-1 estimate between planar empirical measures, averaged
/// over 64 equiangular projection directions.
pub fn sliced_wasserstein1(a: &[C64], b: &[C64]) -> f64 {
    let mut total = 0.0;
    for j in 0..SLICES {
        let t = PI * j as f64 / SLICES as f64;
        let (c, s) = (t.cos(), t.sin());
        let mut pa: Vec<f64> = a.iter().map(|z| z.re * c + z.im * s).collect();
        let mut pb: Vec<f64> = b.iter().map(|z| z.re * c + z.im * s).collect();
        pa.sort_by(f64::total_cmp);
        pb.sort_by(f64::total_cmp);
        total += w1_empirical_1d(&pa, &pb);
    }
    total / SLICES as f64
}

/// Wasserstein-1 distance. On the line and for radial references it is exact
/// (up to quadrature); planar empirical pairs use the sliced estimate; the
/// circle reference uses arc length.
pub fn wasserstein1(emp: &EmpiricalMeasure, reference: Reference) -> Result<f64> {
    if emp.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    match reference {
        Reference::ClosedForm(law) => {
            let (lo, hi) = law.support();
            let atoms = if law.is_radial() {
                match emp {
                    EmpiricalMeasure::Planar(_) => emp.radii(),
                    EmpiricalMeasure::Line(_) => return Err(Error::DimensionMismatch { expected: 2, got: 1 }),
                }
            } else {
                emp.sorted_line().ok_or(Error::DimensionMismatch { expected: 1, got: 2 })?
            };
            let hi = if hi.is_finite() { hi } else { law.quantile(1.0 - 1e-14) };
            Ok(w1_against_cdf(&atoms, &|x| law.cdf(x), lo, hi, &[]))
        }
        Reference::Radial(profile) => {
            let atoms = match emp {
                EmpiricalMeasure::Planar(_) => emp.radii(),
                EmpiricalMeasure::Line(_) => return Err(Error::DimensionMismatch { expected: 2, got: 1 }),
            };
            let s = profile.s();
            let edges: Vec<f64> = s.windows(2).map(|w| (0.25 * (w[0] + w[1])).exp()).collect();
            let total = profile.total_mass();
            let hi = profile.radius_at_mass(total * (1.0 - 1e-12)).min((0.5 * s[s.len() - 1]).exp());
            Ok(w1_against_cdf(&atoms, &|r| profile.mass_within(r) / total, 0.0, hi, &edges))
        }
        Reference::Empirical(other) => match (emp, other) {
            (EmpiricalMeasure::Line(_), EmpiricalMeasure::Line(_)) => Ok(w1_empirical_1d(
                &emp.sorted_line().unwrap(),
                &other.sorted_line().unwrap(),
            )),
            (EmpiricalMeasure::Planar(a), EmpiricalMeasure::Planar(b)) => Ok(sliced_wasserstein1(a, b)),
            _ => Err(Error::DimensionMismatch { expected: 1, got: 2 }),
        },
        Reference::UniformCircle { radius } => {
            let EmpiricalMeasure::Planar(z) = emp else {
                return Err(Error::DimensionMismatch { expected: 2, got: 1 });
            };
            let mut ang: Vec<f64> = z.iter().map(|w| w.arg().rem_euclid(2.0 * PI)).collect();
            ang.sort_by(f64::total_cmp);
            // Circular W1 = min_c int |F(t) - t/2pi - c| dt, the minimizer being a median.
            let m = 1 << 16;
            let dt = 2.0 * PI / m as f64;
            let n = ang.len() as f64;
            let mut d: Vec<f64> = (0..m)
                .map(|i| {
                    let t = (i as f64 + 0.5) * dt;
                    ang.partition_point(|&a| a <= t) as f64 / n - t / (2.0 * PI)
                })
                .collect();
            let raw = d.clone();
            d.sort_by(f64::total_cmp);
            let c = d[m / 2];
            Ok(radius * raw.iter().map(|v| (v - c).abs()).sum::<f64>() * dt)
        }
    }
}

/// Histogram with explicit bin edges and masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    /// Whether bins are in `|z|` for planar data.
    pub radial: bool,
}

impl Histogram {
    /// Radial histogram of `|z|` with `bins` bins over `[0, r_max]`; mass
    /// beyond `r_max` is dropped and the rest renormalized.
    pub fn radial(emp: &EmpiricalMeasure, bins: usize, r_max: f64) -> Result<Self> {
        let r = emp.radii();
        Self::build(&r, 0.0, r_max, bins, true)
    }

    /// Histogram of line atoms over `[lo, hi]`.
    pub fn line(emp: &EmpiricalMeasure, bins: usize, lo: f64, hi: f64) -> Result<Self> {
        let x = emp.sorted_line().ok_or(Error::DimensionMismatch { expected: 1, got: 2 })?;
        Self::build(&x, lo, hi, bins, false)
    }

    /// Default radial binning: 64 bins over the radius holding 99.9% of the atoms.
    pub fn radial_default(emp: &EmpiricalMeasure) -> Result<Self> {
        let r = emp.radii();
        if r.is_empty() {
            return Err(Error::EmptyHistogram);
        }
        let top = r[((r.len() as f64 * 0.999).ceil() as usize).min(r.len()) - 1];
        Self::build(&r, 0.0, top.max(f64::MIN_POSITIVE), 64, true)
    }

    fn build(values: &[f64], lo: f64, hi: f64, bins: usize, radial: bool) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::EmptyHistogram);
        }
        let w = (hi - lo) / bins as f64;
        let mut masses = vec![0.0; bins];
        let mut count = 0usize;
        for &v in values {
            if v >= lo && v <= hi {
                let b = (((v - lo) / w) as usize).min(bins - 1);
                masses[b] += 1.0;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyHistogram);
        }
        for m in &mut masses {
            *m /= count as f64;
        }
        let edges = (0..=bins).map(|i| lo + i as f64 * w).collect();
        Ok(Histogram { edges, masses, radial })
    }
}

/// `sum mu_i log(mu_i / nu_i)` for two probability vectors on the same bins.
pub fn relative_entropy_masses(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.is_empty() || mu.len() != nu.len() {
        return Err(Error::EmptyHistogram);
    }
    let mut d = 0.0;
    for (&m, &v) in mu.iter().zip(nu) {
        if m > 0.0 {
            if v <= 0.0 {
                return Ok(f64::INFINITY);
            }
            d += m * (m / v).ln();
        }
    }
    Ok(d)
}

/// Mass the base measure gives the bin `[a, b]` (of `|z|` when `radial`).
fn base_bin_mass(base: &BaseMeasure, a: f64, b: f64, radial: bool) -> Result<f64> {
    if radial {
        if let (Some(fa), Some(fb)) = (base.radial_cdf(a), base.radial_cdf(b)) {
            return Ok(fb - fa);
        }
        // int 2 pi r rho(r) dr
        let f = |r: f64| {
            if r <= 0.0 {
                0.0
            } else {
                2.0 * PI * r * base.radial_log_density((r * r).ln()).exp()
            }
        };
        return Ok(adaptive_simpson(&f, a, b, 1e-14));
    }
    match &base.kind {
        BaseKind::Gaussian { sigma } => {
            use statrs::distribution::{ContinuousCDF, Normal};
            let nd = Normal::new(0.0, *sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
            Ok(nd.cdf(b) - nd.cdf(a))
        }
        BaseKind::LebesgueOnDomain { domain: Domain::Interval { a: lo, b: hi } } => {
            Ok(((b.min(*hi) - a.max(*lo)).max(0.0)) / (hi - lo))
        }
        BaseKind::LebesgueOnDomain { domain: Domain::Ball { radius } } => {
            Ok(((b.min(*radius) - a.max(-radius)).max(0.0)) / (2.0 * radius))
        }
        BaseKind::LebesgueOnDomain { domain: Domain::Box { lo, hi } } => {
            Ok(((b.min(*hi) - a.max(*lo)).max(0.0)) / (hi - lo))
        }
        BaseKind::Lebesgue => Ok(b - a),
        _ => Err(Error::InvalidInput("base measure has no line marginal".into())),
    }
}

/// Relative entropy of a histogram with respect to a base measure restricted
/// to the histogram range and renormalized there.
pub fn relative_entropy(hist: &Histogram, base: &BaseMeasure) -> Result<f64> {
    if hist.masses.is_empty() || hist.masses.iter().sum::<f64>() <= 0.0 {
        return Err(Error::EmptyHistogram);
    }
    let mut nu = Vec::with_capacity(hist.masses.len());
    for w in hist.edges.windows(2) {
        nu.push(base_bin_mass(base, w[0], w[1], hist.radial)?.max(0.0));
    }
    let total: f64 = nu.iter().sum();
    if !(total > 0.0) {
        return Ok(f64::INFINITY);
    }
    for v in &mut nu {
        *v /= total;
    }
    relative_entropy_masses(&hist.masses, &nu)
}

/// Quadrature resolution for `partition_bruteforce`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Gauss-Legendre nodes in each radius (or line coordinate).
    pub radial_nodes: usize,
    /// Trapezoid nodes in each relative angle (complex mode).
    pub angular_nodes: usize,
    /// Truncation radius; found automatically when absent.
    pub r_max: Option<f64>,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { radial_nodes: 48, angular_nodes: 48, r_max: None }
    }
}

/// `Z` and the free-energy proxy `-(1/(k N)) log Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionEstimate {
    pub z: f64,
    pub log_z: f64,
    pub free_energy: f64,
    pub r_max: f64,
    pub tail: f64,
}

/// Log of the one-particle factor `e^{-beta phi} dV` at radius (or abscissa) `r`.
fn one_particle_log(model: &EnsembleModel, beta: f64, r: f64) -> f64 {
    let z = [C64::new(r, 0.0)];
    let phi = model.weight.value(&z);
    let lv = model.base.log_density(&z, model.mode());
    if phi == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        -beta * phi + lv
    }
}

/// Truncation radius with (polynomially inflated) one-particle tail below 1e-10.
fn truncation_radius(model: &EnsembleModel, beta: f64) -> Result<(f64, f64)> {
    let npart = model.particles() as f64;
    let growth = 2.0 * beta * (npart - 1.0) / model.k() as f64;
    let complex = model.mode() == Mode::Complex;
    let f = |r: f64| {
        let jac = if complex { 2.0 * PI * r } else { 2.0 };
        let v = one_particle_log(model, beta, r);
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            jac * (1.0 + r).powf(growth) * v.exp()
        }
    };
    if let BaseKind::LebesgueOnDomain { domain } = &model.base.kind {
        let r = match *domain {
            Domain::Ball { radius } => radius,
            Domain::Box { lo, hi } => lo.abs().max(hi.abs()) * if complex { 2f64.sqrt() } else { 1.0 },
            Domain::Interval { a, b } => a.abs().max(b.abs()),
            Domain::Circle { .. } => {
                return Err(Error::InvalidInput("circle bases have no Lebesgue density".into()));
            }
        };
        return Ok((r, 0.0));
    }
    // Gauss-Legendre panels, widening geometrically, until they stop contributing
    let panel = |a: f64, b: f64| {
        let (x, w) = gauss_legendre_on(32, a, b);
        x.iter().zip(&w).map(|(&x, &w)| w * f(x)).sum::<f64>()
    };
    let mut edges = vec![0.0f64];
    let mut masses = Vec::new();
    let mut total = 0.0;
    loop {
        let a = *edges.last().unwrap();
        if a > 1e6 {
            return Err(Error::TruncationTail { tail: 1.0 });
        }
        let b = a + (0.05 * a).max(0.25);
        let m = panel(a, b);
        total += m;
        edges.push(b);
        masses.push(m);
        if a > 1.0 && m <= 1e-20 * total {
            break;
        }
    }
    if !(total > 0.0) {
        return Err(Error::TruncationTail { tail: 1.0 });
    }
    let mut r = 1.0;
    while r < 1e6 {
        let j = edges.partition_point(|&e| e <= r);
        let tail = if j >= edges.len() {
            0.0
        } else {
            panel(r, edges[j]) + masses[j..].iter().sum::<f64>()
        };
        if tail / total < 1e-10 {
            return Ok((r, tail / total));
        }
        r *= 1.25;
    }
    Err(Error::TruncationTail { tail: 1.0 })
}

/// Nested tensor quadrature of `int |D|^{2 beta/k} e^{-beta sum phi} dV^N`
/// for `n = 1`, `N in {2, 3}`. Complex mode assumes radial data and integrates
/// out the common rotation.
pub fn partition_bruteforce(model: &EnsembleModel, quad: QuadSpec) -> Result<PartitionEstimate> {
    let npart = model.particles();
    if model.n() != 1 || !(2..=3).contains(&npart) {
        return Err(Error::InvalidInput("partition_bruteforce needs n = 1 and N in {2, 3}".into()));
    }
    let beta = model.beta();
    if !beta.is_finite() {
        return Err(Error::InvalidInput("finite beta required".into()));
    }
    let complex = model.mode() == Mode::Complex;
    if complex && !(model.weight.is_radial() && is_radial_base(&model.base)) {
        return Err(Error::InvalidInput("complex-mode quadrature needs radial weight and base".into()));
    }
    let (r_max, tail) = match quad.r_max {
        Some(r) => (r, 0.0),
        None => truncation_radius(model, beta)?,
    };
    let p = beta / model.k() as f64;
    let factorial = if npart == 2 { 2.0 } else { 6.0 };
    let lo = if complex { 0.0 } else { -r_max };
    let one = |x: f64| one_particle_log(model, beta, x).exp();
    let total = if complex {
        let m = quad.angular_nodes;
        let theta: Vec<C64> = (0..m).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect();
        let dth = 2.0 * PI / m as f64;
        // the common rotation is fixed by putting z_1 on the positive axis
        let angular = |r: &[f64]| -> f64 {
            let z1 = C64::new(r[0], 0.0);
            let mut acc = 0.0;
            for t2 in &theta {
                let z2 = r[1] * t2;
                let d12 = (z1 - z2).norm_sqr();
                if npart == 2 {
                    acc += d12.powf(p) * dth;
                } else {
                    for t3 in &theta {
                        let z3 = r[2] * t3;
                        acc += (d12 * (z1 - z3).norm_sqr() * (z2 - z3).norm_sqr()).powf(p) * dth * dth;
                    }
                }
            }
            acc
        };
        2.0 * PI * ordered_integral(quad.radial_nodes, lo, r_max, npart, &|r| {
            let w: f64 = r.iter().map(|&x| x * one(x)).product();
            if w == 0.0 {
                0.0
            } else {
                w * angular(r)
            }
        })
    } else {
        ordered_integral(quad.radial_nodes, lo, r_max, npart, &|x| {
            let w: f64 = x.iter().map(|&v| one(v)).product();
            let mut d = 1.0;
            for i in 0..x.len() {
                for j in i + 1..x.len() {
                    d *= (x[i] - x[j]).powi(2);
                }
            }
            if w == 0.0 {
                0.0
            } else {
                w * d.powf(p)
            }
        })
    };
    let log_z = (factorial * total).ln();
    Ok(PartitionEstimate {
        z: log_z.exp(),
        log_z,
        free_energy: -log_z / (model.k() * npart) as f64,
        r_max,
        tail,
    })
}

/// `int_{lo < x_1 < ... < x_N < hi} f` by nested Gauss-Legendre, so that the
/// kinks of `|x_i - x_j|^s` sit on region boundaries rather than inside them.
fn ordered_integral<F: Fn(&[f64]) -> f64 + Sync>(nodes: usize, lo: f64, hi: f64, npart: usize, f: &F) -> f64 {
    fn inner<F: Fn(&[f64]) -> f64>(nodes: usize, hi: f64, x: &mut Vec<f64>, left: usize, f: &F) -> f64 {
        if left == 0 {
            return f(x);
        }
        let a = *x.last().unwrap();
        let (t, w) = gauss_legendre_on(nodes, a, hi);
        let mut acc = 0.0;
        for (ti, wi) in t.iter().zip(&w) {
            x.push(*ti);
            acc += wi * inner(nodes, hi, x, left - 1, f);
            x.pop();
        }
        acc
    }
    let (t, w) = gauss_legendre_on(nodes, lo, hi);
    t.par_iter()
        .zip(w.par_iter())
        .map(|(ti, wi)| {
            let mut x = Vec::with_capacity(npart);
            x.push(*ti);
            wi * inner(nodes, hi, &mut x, npart - 1, f)
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

fn is_radial_base(base: &BaseMeasure) -> bool {
    match &base.kind {
        BaseKind::Lebesgue | BaseKind::Gaussian { .. } | BaseKind::RadialDensity { .. } => true,
        BaseKind::LebesgueOnDomain { domain } => matches!(domain, Domain::Ball { .. }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_atoms_are_at_distance_zero() {
        let a = EmpiricalMeasure::line(vec![0.3, -1.0, 2.0]);
        assert_eq!(wasserstein1(&a, Reference::Empirical(&a)).unwrap(), 0.0);
    }

    #[test]
    fn equidistant_circle_points() {
        let n = 13;
        let z: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64 + 0.1)).collect();
        let d = wasserstein1(&EmpiricalMeasure::planar(z), Reference::UniformCircle { radius: 1.0 }).unwrap();
        assert!(d <= PI / n as f64 && d > 0.0, "{d}");
    }

    #[test]
    fn w1_to_a_closed_form_law() {
        // quantile atoms of the arcsine law at (i - 1/2)/N are close to it
        let law = ClosedFormMeasure::Arcsine;
        let n = 400;
        let atoms: Vec<f64> = (0..n).map(|i| law.quantile((i as f64 + 0.5) / n as f64)).collect();
        let d = wasserstein1(&EmpiricalMeasure::line(atoms), Reference::ClosedForm(&law)).unwrap();
        assert!(d < 2.0 / n as f64, "{d}");
        // point mass at 0 vs arcsine: E|X| = 2/pi
        let d = wasserstein1(&EmpiricalMeasure::line(vec![0.0]), Reference::ClosedForm(&law)).unwrap();
        assert!((d - 2.0 / PI).abs() < 1e-9, "{d}");
    }

    #[test]
    fn entropy_examples() {
        let uni = BaseMeasure::uniform(Domain::Interval { a: 0.0, b: 1.0 });
        let full: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let h = Histogram::line(&EmpiricalMeasure::line(full), 10, 0.0, 1.0).unwrap();
        assert!(relative_entropy(&h, &uni).unwrap().abs() < 1e-12);
        let half: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 2000.0).collect();
        let h = Histogram::line(&EmpiricalMeasure::line(half), 10, 0.0, 1.0).unwrap();
        assert!((relative_entropy(&h, &uni).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(relative_entropy_masses(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(relative_entropy_masses(&[], &[]).is_err());
    }
}
