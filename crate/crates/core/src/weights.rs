//! Weights `phi`, base measures `dV`, the admissibility test, and the radial
//! weighted extremal function.
//!
//! Radial objects in one complex variable are handled in the logarithmic
//! coordinate `s = log |z|^2`. A radial function is subharmonic with
//! logarithmic growth exactly when its profile is convex in `s` with slope in
//! `[0, 1]`, so the weighted extremal function becomes a slope-constrained
//! lower convex envelope of the weight profile.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::equilibrium::RadialProfile;
use crate::error::{Error, Result};
use crate::polybasis::Mode;

/// Tail behaviour declared for a tabulated radial profile beyond its last node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tail", rename_all = "kebab-case")]
pub enum Tail {
    /// Continues affinely in `s` with the given slope, i.e. `~ slope * log|z|^2`.
    Slope { slope: f64 },
    /// Grows like a power of `|z|` or faster, but at most iterated-exponentially.
    Superlogarithmic,
    /// Grows faster than any iterated exponential.
    BeyondIteratedExponential,
    /// Nothing declared; extrapolation uses the last segment.
    Undeclared,
}

/// Profile tabulated on a strictly increasing `s` grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialTable {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default = "undeclared")]
    pub tail: Tail,
}

fn undeclared() -> Tail {
    Tail::Undeclared
}

impl RadialTable {
    pub fn new(s: Vec<f64>, values: Vec<f64>, tail: Tail) -> Result<Self> {
        if s.len() < 2 || s.len() != values.len() {
            return Err(Error::Parse("radial table needs at least two (s, value) rows".into()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parse("s values must be strictly increasing".into()));
        }
        if s.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Parse("radial table contains non-finite entries".into()));
        }
        Ok(RadialTable { s, values, tail })
    }

    /// Parse whitespace- or comma-separated `(s, value)` rows; `#` starts a comment.
    pub fn parse(text: &str, tail: Tail) -> Result<Self> {
        let mut s = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
            }
            let parse = |t: &str| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            s.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
        }
        Self::new(s, v, tail)
    }

    pub fn load(path: &Path, tail: Tail) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(e.to_string()))?;
        Self::parse(&text, tail)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s <= self.s[0] {
            let slope = (self.values[1] - self.values[0]) / (self.s[1] - self.s[0]);
            return self.values[0] + slope * (s - self.s[0]);
        }
        if s >= self.s[n - 1] {
            let slope = match self.tail {
                Tail::Slope { slope } => slope,
                _ => (self.values[n - 1] - self.values[n - 2]) / (self.s[n - 1] - self.s[n - 2]),
            };
            return self.values[n - 1] + slope * (s - self.s[n - 1]);
        }
        let j = self.s.partition_point(|&x| x <= s) - 1;
        let t = (s - self.s[j]) / (self.s[j + 1] - self.s[j]);
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }
}

/// Radial carrier of an indicator weight: the annulus `r_inner <= |z| <= r_outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    #[serde(default)]
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Annulus {
    pub fn contains(&self, r: f64) -> bool {
        r >= self.r_inner && r <= self.r_outer
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightKind {
    /// `|z|^2`
    Quadratic,
    /// `|z|^2 / 2` (on the real line, `x^2 / 2`)
    HalfQuadratic,
    /// `log(1 + |z|^2)`
    FubiniStudy,
    /// `max_i log+ |z_i|^2`
    TorusLog,
    /// `0` on the carrier, `+inf` off it.
    Indicator { carrier: Annulus },
    /// Tabulated profile in `s = log |z|^2`.
    CustomRadial { profile: RadialTable },
}

/// `phi(z) = scale * base(z) + shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    #[serde(flatten)]
    pub kind: WeightKind,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub shift: f64,
}

fn one() -> f64 {
    1.0
}

fn norm_sqr(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

impl Weight {
    pub fn new(kind: WeightKind) -> Self {
        Weight { kind, scale: 1.0, shift: 0.0 }
    }

    pub fn quadratic() -> Self {
        Self::new(WeightKind::Quadratic)
    }

    pub fn half_quadratic() -> Self {
        Self::new(WeightKind::HalfQuadratic)
    }

    pub fn fubini_study() -> Self {
        Self::new(WeightKind::FubiniStudy)
    }

    pub fn torus_log() -> Self {
        Self::new(WeightKind::TorusLog)
    }

    pub fn zero() -> Self {
        Weight { kind: WeightKind::Quadratic, scale: 0.0, shift: 0.0 }
    }

    pub fn indicator(carrier: Annulus) -> Self {
        Self::new(WeightKind::Indicator { carrier })
    }

    pub fn custom_radial(profile: RadialTable) -> Self {
        Self::new(WeightKind::CustomRadial { profile })
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn shifted(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn is_radial(&self) -> bool {
        true
    }

    fn base_value(&self, z: &[C64]) -> f64 {
        match &self.kind {
            WeightKind::Quadratic => norm_sqr(z),
            WeightKind::HalfQuadratic => 0.5 * norm_sqr(z),
            WeightKind::FubiniStudy => norm_sqr(z).ln_1p(),
            WeightKind::TorusLog => z
                .iter()
                .map(|c| c.norm_sqr().ln().max(0.0))
                .fold(0.0, f64::max),
            WeightKind::Indicator { carrier } => {
                if carrier.contains(norm_sqr(z).sqrt()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            WeightKind::CustomRadial { profile } => profile.eval(norm_sqr(z).ln()),
        }
    }

    /// `phi(z)`, possibly `+inf` for indicator weights.
    pub fn value(&self, z: &[C64]) -> f64 {
        let b = self.base_value(z);
        if b == f64::INFINITY {
            return f64::INFINITY;
        }
        if self.scale == 0.0 {
            return self.shift;
        }
        self.scale * b + self.shift
    }

    /// Radial profile `phi(s)` with `s = log |z|^2`.
    pub fn profile(&self, s: f64) -> f64 {
        let b = match &self.kind {
            WeightKind::Quadratic => s.exp(),
            WeightKind::HalfQuadratic => 0.5 * s.exp(),
            WeightKind::FubiniStudy => s.exp().ln_1p(),
            WeightKind::TorusLog => s.max(0.0),
            WeightKind::Indicator { carrier } => {
                if carrier.contains((0.5 * s).exp()) {
                    0.0
                } else {
                    return f64::INFINITY;
                }
            }
            WeightKind::CustomRadial { profile } => profile.eval(s),
        };
        if self.scale == 0.0 {
            self.shift
        } else {
            self.scale * b + self.shift
        }
    }

    /// Real gradient `[d/d re_1..re_n, d/d im_1..im_n]`; `None` where `phi = +inf`.
    pub fn gradient(&self, z: &[C64]) -> Option<Vec<f64>> {
        let n = z.len();
        let mut g = vec![0.0; 2 * n];
        let r2 = norm_sqr(z);
        let radial = |g: &mut Vec<f64>, d: f64| {
            // d/dx_l f(|z|^2) = 2 x_l f'(|z|^2)
            for l in 0..n {
                g[l] = 2.0 * z[l].re * d;
                g[n + l] = 2.0 * z[l].im * d;
            }
        };
        match &self.kind {
            WeightKind::Quadratic => radial(&mut g, 1.0),
            WeightKind::HalfQuadratic => radial(&mut g, 0.5),
            WeightKind::FubiniStudy => radial(&mut g, 1.0 / (1.0 + r2)),
            WeightKind::TorusLog => {
                let mut best = 0.0;
                let mut arg = None;
                for (l, c) in z.iter().enumerate() {
                    let v = c.norm_sqr().ln();
                    if v > best {
                        best = v;
                        arg = Some(l);
                    }
                }
                if let Some(l) = arg {
                    let m = z[l].norm_sqr();
                    g[l] = 2.0 * z[l].re / m;
                    g[n + l] = 2.0 * z[l].im / m;
                }
            }
            WeightKind::Indicator { .. } => {
                if self.base_value(z) == f64::INFINITY {
                    return None;
                }
            }
            WeightKind::CustomRadial { .. } => {
                let h = 1e-6;
                let mut w = z.to_vec();
                for slot in 0..2 * n {
                    let (l, dir) = if slot < n { (slot, C64::new(h, 0.0)) } else { (slot - n, C64::new(0.0, h)) };
                    w[l] = z[l] + dir;
                    let fp = self.base_value(&w);
                    w[l] = z[l] - dir;
                    let fm = self.base_value(&w);
                    w[l] = z[l];
                    g[slot] = (fp - fm) / (2.0 * h);
                }
            }
        }
        for v in &mut g {
            *v *= self.scale;
        }
        Some(g)
    }

    /// Declared growth slope `limsup phi / log|z|^2` (`+inf` for super-logarithmic weights).
    pub fn growth_slope(&self) -> Option<f64> {
        let base = match &self.kind {
            WeightKind::Quadratic | WeightKind::HalfQuadratic | WeightKind::Indicator { .. } => {
                f64::INFINITY
            }
            WeightKind::FubiniStudy | WeightKind::TorusLog => 1.0,
            WeightKind::CustomRadial { profile } => match profile.tail {
                Tail::Slope { slope } => slope,
                Tail::Superlogarithmic | Tail::BeyondIteratedExponential => f64::INFINITY,
                Tail::Undeclared => return None,
            },
        };
        Some(if self.scale == 0.0 { 0.0 } else { self.scale * base })
    }
}

/// Domain of a uniform base measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "kebab-case")]
pub enum Domain {
    /// Ball `|z| <= radius` in `C^n` (on the real line: `[-radius, radius]`).
    Ball { radius: f64 },
    /// Box `[lo, hi]` in every real coordinate.
    Box { lo: f64, hi: f64 },
    /// Interval `[a, b]` of the real line.
    Interval { a: f64, b: f64 },
    /// Circle `|z| = radius` in `C` (arc-length measure).
    Circle { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseKind {
    Lebesgue,
    /// Complex coordinates: density `prod (pi sigma^2)^-1 e^{-|z_l|^2/sigma^2}`;
    /// real line: `N(0, sigma^2)`.
    Gaussian { sigma: f64 },
    /// Lebesgue measure restricted to a domain.
    LebesgueOnDomain {
        #[serde(flatten)]
        domain: Domain,
    },
    /// Radial density with respect to Lebesgue measure on `C`, tabulated as
    /// `log rho` against `s = log |z|^2`.
    RadialDensity { log_density: RadialTable },
}

/// Base measure `dV` with its normalization convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseMeasure {
    #[serde(flatten)]
    pub kind: BaseKind,
    #[serde(default)]
    pub probability: bool,
    #[serde(skip)]
    mass: MassCache,
}

/// Lazily computed raw mass; ignored by equality.
#[derive(Debug, Clone, Default)]
struct MassCache(std::sync::OnceLock<f64>);

impl PartialEq for MassCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl BaseMeasure {
    pub fn lebesgue() -> Self {
        BaseMeasure { kind: BaseKind::Lebesgue, probability: false, mass: MassCache::default() }
    }

    pub fn gaussian(sigma: f64) -> Self {
        BaseMeasure { kind: BaseKind::Gaussian { sigma }, probability: true, mass: MassCache::default() }
    }

    pub fn uniform(domain: Domain) -> Self {
        BaseMeasure { kind: BaseKind::LebesgueOnDomain { domain }, probability: true, mass: MassCache::default() }
    }

    pub fn radial_density(log_density: RadialTable, probability: bool) -> Self {
        BaseMeasure { kind: BaseKind::RadialDensity { log_density }, probability, mass: MassCache::default() }
    }

    pub fn is_probability(&self) -> bool {
        self.probability && !matches!(self.kind, BaseKind::Lebesgue)
    }

    /// Whether the measure has no density with respect to Lebesgue measure.
    pub fn is_singular(&self) -> bool {
        matches!(self.kind, BaseKind::LebesgueOnDomain { domain: Domain::Circle { .. } })
    }

    /// Total mass of the raw (unnormalized) measure on the ambient space of
    /// real dimension `dim` (`2n` in complex mode, `n` on the real line).
    fn raw_mass(&self, dim: usize) -> f64 {
        match &self.kind {
            BaseKind::Lebesgue => f64::INFINITY,
            BaseKind::Gaussian { .. } => 1.0,
            BaseKind::LebesgueOnDomain { domain } => match *domain {
                Domain::Ball { radius } => {
                    // volume of the real ball of dimension dim
                    let d = dim as f64;
                    PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0) * radius.powf(d)
                }
                Domain::Box { lo, hi } => (hi - lo).powi(dim as i32),
                Domain::Interval { a, b } => b - a,
                Domain::Circle { radius } => 2.0 * PI * radius,
            },
            BaseKind::RadialDensity { log_density } => {
                // integral of rho over C = int pi e^s rho(s) ds
                let lo = log_density.s[0] - 40.0;
                let hi = log_density.s[log_density.s.len() - 1] + 40.0;
                let m = 200_000;
                let h = (hi - lo) / m as f64;
                (0..m)
                    .map(|i| {
                        let s = lo + (i as f64 + 0.5) * h;
                        PI * (s + log_density.eval(s)).exp() * h
                    })
                    .sum()
            }
        }
    }

    fn cached_mass(&self, dim: usize) -> f64 {
        match self.kind {
            BaseKind::RadialDensity { .. } => *self.mass.0.get_or_init(|| self.raw_mass(dim)),
            _ => self.raw_mass(dim),
        }
    }

    /// `log` of the density with respect to Lebesgue measure on the ambient
    /// space (`-inf` off the support). Circle measures report the density with
    /// respect to arc length and are only meaningful on the circle.
    pub fn log_density(&self, z: &[C64], mode: Mode) -> f64 {
        let dim = if mode == Mode::Complex { 2 * z.len() } else { z.len() };
        let norm = if self.probability { -self.cached_mass(dim).ln() } else { 0.0 };
        let raw = match &self.kind {
            BaseKind::Lebesgue => 0.0,
            BaseKind::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                match mode {
                    Mode::Complex => z
                        .iter()
                        .map(|c| -c.norm_sqr() / s2 - (PI * s2).ln())
                        .sum(),
                    _ => z
                        .iter()
                        .map(|c| -0.5 * c.re * c.re / s2 - 0.5 * (2.0 * PI * s2).ln())
                        .sum(),
                }
            }
            BaseKind::LebesgueOnDomain { domain } => {
                let inside = match *domain {
                    Domain::Ball { radius } => norm_sqr(z) <= radius * radius,
                    Domain::Box { lo, hi } => z
                        .iter()
                        .all(|c| c.re >= lo && c.re <= hi && (mode != Mode::Complex || (c.im >= lo && c.im <= hi))),
                    Domain::Interval { a, b } => z.iter().all(|c| c.re >= a && c.re <= b),
                    Domain::Circle { .. } => true,
                };
                if inside {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            BaseKind::RadialDensity { log_density } => log_density.eval(norm_sqr(z).ln()),
        };
        raw + norm
    }

    /// Gradient of `log_density` in the layout `[re_1..re_n, im_1..im_n]`
    /// (zero where the density is locally constant).
    pub fn grad_log_density(&self, z: &[C64], mode: Mode) -> Vec<f64> {
        let n = z.len();
        let mut g = vec![0.0; 2 * n];
        match &self.kind {
            BaseKind::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                for l in 0..n {
                    if mode == Mode::Complex {
                        g[l] = -2.0 * z[l].re / s2;
                        g[n + l] = -2.0 * z[l].im / s2;
                    } else {
                        g[l] = -z[l].re / s2;
                    }
                }
            }
            BaseKind::RadialDensity { log_density } => {
                let r2 = norm_sqr(z);
                if r2 > 0.0 {
                    let s = r2.ln();
                    let h = 1e-6;
                    let d = (log_density.eval(s + h) - log_density.eval(s - h)) / (2.0 * h);
                    for l in 0..n {
                        g[l] = 2.0 * z[l].re / r2 * d;
                        g[n + l] = 2.0 * z[l].im / r2 * d;
                    }
                }
            }
            _ => {}
        }
        if mode != Mode::Complex {
            for v in &mut g[n..] {
                *v = 0.0;
            }
        }
        g
    }

    /// Radial density `rho(s)` with respect to Lebesgue measure on `C`.
    pub fn radial_log_density(&self, s: f64) -> f64 {
        let r = (0.5 * s).exp();
        self.log_density(&[C64::new(r, 0.0)], Mode::Complex)
    }

    /// Mass of `{|z| <= r}` for radial probability measures on `C`, when a
    /// closed form exists.
    pub fn radial_cdf(&self, r: f64) -> Option<f64> {
        if !self.probability {
            return None;
        }
        match &self.kind {
            BaseKind::Gaussian { sigma } => Some(-(-(r * r) / (sigma * sigma)).exp_m1()),
            BaseKind::LebesgueOnDomain { domain: Domain::Ball { radius } } => {
                Some((r / radius).min(1.0).powi(2))
            }
            BaseKind::LebesgueOnDomain { domain: Domain::Circle { radius } } => {
                Some(if r >= *radius { 1.0 } else { 0.0 })
            }
            _ => None,
        }
    }

    /// Slope of `-log(dV/dlambda)` against `log |z|^2` along rays, `+inf` for
    /// super-logarithmic decay or compact support.
    fn tail_slope(&self) -> Option<f64> {
        match &self.kind {
            BaseKind::Lebesgue => Some(0.0),
            BaseKind::Gaussian { .. } | BaseKind::LebesgueOnDomain { .. } => Some(f64::INFINITY),
            BaseKind::RadialDensity { log_density } => match log_density.tail {
                Tail::Slope { slope } => Some(-slope),
                Tail::Superlogarithmic | Tail::BeyondIteratedExponential => Some(f64::NEG_INFINITY),
                Tail::Undeclared => None,
            },
        }
    }
}

/// Draws i.i.d. points from a probability base measure.
#[derive(Debug, Clone)]
pub struct BaseSampler {
    base: BaseMeasure,
    n: usize,
    mode: Mode,
    // cumulative radial mass against s, for tabulated radial densities
    table: Option<(Vec<f64>, Vec<f64>)>,
}

impl BaseSampler {
    pub fn new(base: &BaseMeasure, n: usize, mode: Mode) -> Result<Self> {
        let table = match &base.kind {
            BaseKind::Lebesgue => {
                return Err(Error::NonProbabilityBase);
            }
            BaseKind::LebesgueOnDomain { domain: Domain::Circle { .. } } if n != 1 || mode != Mode::Complex => {
                return Err(Error::InvalidInput("circle measures live in one complex variable".into()));
            }
            BaseKind::RadialDensity { log_density } => {
                if n != 1 || mode != Mode::Complex {
                    return Err(Error::InvalidInput("radial densities live in one complex variable".into()));
                }
                let lo = log_density.s[0] - 40.0;
                let hi = log_density.s[log_density.s.len() - 1] + 40.0;
                let m = 200_000;
                let h = (hi - lo) / m as f64;
                let mut s = Vec::with_capacity(m + 1);
                let mut c = Vec::with_capacity(m + 1);
                let mut acc = 0.0;
                s.push(lo);
                c.push(0.0);
                for i in 0..m {
                    let mid = lo + (i as f64 + 0.5) * h;
                    acc += PI * (mid + log_density.eval(mid)).exp() * h;
                    s.push(lo + (i + 1) as f64 * h);
                    c.push(acc);
                }
                if !(acc.is_finite() && acc > 0.0) {
                    return Err(Error::NonProbabilityBase);
                }
                for v in &mut c {
                    *v /= acc;
                }
                Some((s, c))
            }
            _ => None,
        };
        Ok(BaseSampler { base: base.clone(), n, mode, table })
    }

    /// One point of `C^n` (imaginary parts zero in real modes).
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<C64> {
        use rand_distr::{Distribution, StandardNormal};
        let n = self.n;
        let complex = self.mode == Mode::Complex;
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        match &self.base.kind {
            BaseKind::Lebesgue => unreachable!(),
            BaseKind::Gaussian { sigma } => (0..n)
                .map(|_| {
                    if complex {
                        // E|z|^2 = sigma^2
                        let t = sigma / 2f64.sqrt();
                        C64::new(t * normal(), t * normal())
                    } else {
                        C64::new(sigma * normal(), 0.0)
                    }
                })
                .collect(),
            BaseKind::LebesgueOnDomain { domain } => match *domain {
                Domain::Ball { radius } => {
                    let d = if complex { 2 * n } else { n };
                    let v: Vec<f64> = (0..d).map(|_| normal()).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let u: f64 = rng.random();
                    let r = radius * u.powf(1.0 / d as f64) / norm;
                    if complex {
                        (0..n).map(|l| C64::new(r * v[l], r * v[n + l])).collect()
                    } else {
                        v.iter().map(|x| C64::new(r * x, 0.0)).collect()
                    }
                }
                Domain::Box { lo, hi } => (0..n)
                    .map(|_| {
                        let re = rng.random_range(lo..hi);
                        let im = if complex { rng.random_range(lo..hi) } else { 0.0 };
                        C64::new(re, im)
                    })
                    .collect(),
                Domain::Interval { a, b } => (0..n).map(|_| C64::new(rng.random_range(a..b), 0.0)).collect(),
                Domain::Circle { radius } => {
                    let t = rng.random_range(0.0..2.0 * PI);
                    vec![C64::from_polar(radius, t)]
                }
            },
            BaseKind::RadialDensity { .. } => {
                let (s, c) = self.table.as_ref().expect("table built for radial densities");
                let u: f64 = rng.random();
                let j = c.partition_point(|&v| v < u).clamp(1, c.len() - 1);
                let t = (u - c[j - 1]) / (c[j] - c[j - 1]).max(f64::MIN_POSITIVE);
                let sv = s[j - 1] + t.clamp(0.0, 1.0) * (s[j] - s[j - 1]);
                let th = rng.random_range(0.0..2.0 * PI);
                vec![C64::from_polar((0.5 * sv).exp(), th)]
            }
        }
    }
}

/// Outcome of the admissibility test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Admissibility {
    Ok { margin: f64 },
    FailsGrowth { slope: f64, required: f64 },
    FailsIteratedExponential,
}

impl Admissibility {
    pub fn is_ok(&self) -> bool {
        matches!(self, Admissibility::Ok { .. })
    }
}

/// Rays `|z| in {1e2, 1e4, 1e8}` used for the numerical tail proxy.
const TAIL_RADII: [f64; 3] = [1e2, 1e4, 1e8];

fn numerical_slope(f: impl Fn(f64) -> f64) -> Option<f64> {
    let slopes: Vec<f64> = TAIL_RADII
        .windows(2)
        .map(|w| {
            let (s0, s1) = ((w[0] * w[0]).ln(), (w[1] * w[1]).ln());
            (f(s1) - f(s0)) / (s1 - s0)
        })
        .collect();
    let (a, b) = (slopes[0], slopes[1]);
    if (a - b).abs() <= 0.01 * a.abs().max(b.abs()).max(1e-12) {
        Some(b)
    } else {
        None
    }
}

/// Checks `phi - beta^-1 log(dV/dlambda) >= (1 + n/beta + eps) log|z|^2` for
/// large `|z|` and returns the largest `eps` in `{0.5, 0.1, 0.01}` that passes.
pub fn admissibility_check(weight: &Weight, base: &BaseMeasure, beta: f64, n: usize) -> Result<Admissibility> {
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    if let WeightKind::CustomRadial { profile } = &weight.kind {
        if profile.tail == Tail::BeyondIteratedExponential {
            return Ok(Admissibility::FailsIteratedExponential);
        }
    }
    let phi_slope = match weight.growth_slope() {
        Some(v) => v,
        None => {
            let WeightKind::CustomRadial { profile } = &weight.kind else { unreachable!() };
            if profile.s[profile.s.len() - 1] < (TAIL_RADII[2] * TAIL_RADII[2]).ln() {
                return Err(Error::CannotClassify(
                    "custom profile does not reach |z| = 1e8 and declares no tail".into(),
                ));
            }
            numerical_slope(|s| weight.profile(s))
                .ok_or_else(|| Error::CannotClassify("tail slopes disagree beyond 1%".into()))?
        }
    };
    let base_slope = match base.tail_slope() {
        Some(v) => v,
        None => {
            let BaseKind::RadialDensity { log_density } = &base.kind else { unreachable!() };
            if log_density.s[log_density.s.len() - 1] < (TAIL_RADII[2] * TAIL_RADII[2]).ln() {
                return Err(Error::CannotClassify(
                    "custom density does not reach |z| = 1e8 and declares no tail".into(),
                ));
            }
            numerical_slope(|s| -log_density.eval(s))
                .ok_or_else(|| Error::CannotClassify("density tail slopes disagree beyond 1%".into()))?
        }
    };
    let slope = phi_slope + base_slope / beta;
    let required = 1.0 + n as f64 / beta;
    for eps in [0.5, 0.1, 0.01] {
        if slope > required + eps {
            return Ok(Admissibility::Ok { margin: eps });
        }
    }
    Ok(Admissibility::FailsGrowth { slope, required })
}

/// Largest convex minorant of the profile `phi(s)` on the grid with slope in
/// `[0, 1]`: the radial weighted extremal function in one variable.
pub fn weighted_extremal_radial(weight: &Weight, s_grid: &[f64]) -> Result<RadialProfile> {
    let values: Vec<f64> = s_grid.iter().map(|&s| weight.profile(s)).collect();
    constrained_envelope(s_grid, &values)
}

/// Slope-constrained lower convex envelope of tabulated values (`+inf` entries
/// are obstacles that impose nothing).
pub fn constrained_envelope(s_grid: &[f64], values: &[f64]) -> Result<RadialProfile> {
    if s_grid.len() < 3 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadGrid("grid must be strictly increasing with at least 3 nodes".into()));
    }
    if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(Error::WeightUnboundedBelow);
    }
    let finite: Vec<usize> = (0..s_grid.len()).filter(|&i| values[i].is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::GridTooShort("weight is +inf on the whole grid".into()));
    }
    // Monotone chain lower hull over the finite nodes.
    let mut hull: Vec<usize> = Vec::new();
    for &i in &finite {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (s_grid[b] - s_grid[a]) * (values[i] - values[a])
                - (values[b] - values[a]) * (s_grid[i] - s_grid[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let slope = |a: usize, b: usize| (values[b] - values[a]) / (s_grid[b] - s_grid[a]);
    // a: first hull vertex whose outgoing slope is >= 0 (the minimum).
    let mut lo = hull.len() - 1;
    for h in 0..hull.len() - 1 {
        if slope(hull[h], hull[h + 1]) >= 0.0 {
            lo = h;
            break;
        }
    }
    if lo == hull.len() - 1 && hull.len() > 1 && hull[lo] == s_grid.len() - 1 {
        return Err(Error::WeightUnboundedBelow);
    }
    // b: first vertex at or after `lo` whose outgoing slope exceeds 1.
    let mut hi = hull.len() - 1;
    for h in lo..hull.len() - 1 {
        if slope(hull[h], hull[h + 1]) > 1.0 {
            hi = h;
            break;
        }
    }
    let last_finite = *finite.last().unwrap();
    if hi == hull.len() - 1 && last_finite == s_grid.len() - 1 && hull.len() > 1 {
        let end_slope = slope(hull[hull.len() - 2], hull[hull.len() - 1]);
        if end_slope < 1.0 - 1e-3 {
            return Err(Error::GridTooShort(format!(
                "envelope slope only reaches {end_slope:.6} at the end of the grid"
            )));
        }
    }
    let (s_lo, y_lo) = (s_grid[hull[lo]], values[hull[lo]]);
    let (s_hi, y_hi) = (s_grid[hull[hi]], values[hull[hi]]);
    let n = s_grid.len();
    let mut psi = vec![0.0; n];
    let mut m = vec![1.0; n];
    let mut h = lo;
    for (i, &s) in s_grid.iter().enumerate() {
        psi[i] = if s <= s_lo {
            y_lo
        } else if s >= s_hi {
            y_hi + (s - s_hi)
        } else {
            while s_grid[hull[h + 1]] < s {
                h += 1;
            }
            let (a, b) = (hull[h], hull[h + 1]);
            if i == b {
                values[b]
            } else {
                values[a] + slope(a, b) * (s - s_grid[a])
            }
        };
    }
    // cell slopes straight from the hull edges
    let mut h = lo;
    for i in 0..n - 1 {
        m[i] = if s_grid[i] < s_lo {
            0.0
        } else if s_grid[i] >= s_hi {
            1.0
        } else {
            while s_grid[hull[h + 1]] <= s_grid[i] {
                h += 1;
            }
            slope(hull[h], hull[h + 1]).clamp(0.0, 1.0)
        };
    }
    Ok(RadialProfile::from_parts(s_grid.to_vec(), psi, m))
}
