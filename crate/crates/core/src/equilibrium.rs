//! Macroscopic limits in one complex variable.
//!
//! Radial potentials live on a grid in `s = log |z|^2`. For a radial `psi`
//! the Monge-Ampere mass `(1/4pi) Lap psi` of the disc `|z| <= e^{s/2}` equals
//! `psi'(s)`, so the mean-field equation `MA(psi) = e^{beta(psi - phi)} dV`
//! becomes the two-point problem
//!
//! ```text
//! psi''(s) = pi e^s rho(s) e^{beta (psi(s) - phi(s))},   psi'(-inf) = 0,  psi'(+inf) = 1
//! ```
//!
//! discretized with node-centred dual cells: `m_i`, the flux leaving dual
//! cell `i` on the right, is the cumulative mass through that cell, and the
//! last flux is pinned to `1`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::weights::{admissibility_check, weighted_extremal_radial, BaseKind, BaseMeasure, Weight};

/// Default grid: 4001 nodes uniform on `[-12, 12]`.
pub fn default_grid() -> Vec<f64> {
    uniform_grid(-12.0, 12.0, 4001)
}

pub fn uniform_grid(lo: f64, hi: f64, nodes: usize) -> Vec<f64> {
    let h = (hi - lo) / (nodes - 1) as f64;
    (0..nodes).map(|i| lo + i as f64 * h).collect()
}

/// A radial potential `psi(s)` with its cumulative Monge-Ampere mass `m`.
///
/// `m[i]` is the slope of `psi` on the cell `[s_i, s_{i+1}]`, i.e. the MA mass
/// of the disc of radius `e^{s_{i+1/2}/2}`; the last entry is the total mass,
/// which also accounts for any mass beyond the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    s: Vec<f64>,
    psi: Vec<f64>,
    m: Vec<f64>,
}

impl RadialProfile {
    /// Profile of a potential with logarithmic growth: cell slopes, total mass 1.
    pub fn from_values(s: Vec<f64>, psi: Vec<f64>) -> Self {
        let n = s.len();
        let mut m: Vec<f64> = (0..n - 1)
            .map(|i| (psi[i + 1] - psi[i]) / (s[i + 1] - s[i]))
            .collect();
        m.push(1.0);
        RadialProfile { s, psi, m }
    }

    pub fn from_parts(s: Vec<f64>, psi: Vec<f64>, m: Vec<f64>) -> Self {
        RadialProfile { s, psi, m }
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn total_mass(&self) -> f64 {
        *self.m.last().unwrap()
    }

    /// MA mass carried by each dual cell.
    pub fn cell_masses(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.m
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect()
    }

    /// `psi` at an arbitrary `s`, linear inside the grid and extended with the
    /// boundary slopes outside.
    pub fn eval(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s <= self.s[0] {
            return self.psi[0];
        }
        if s >= self.s[n - 1] {
            return self.psi[n - 1] + (s - self.s[n - 1]);
        }
        let j = self.s.partition_point(|&x| x <= s) - 1;
        let t = (s - self.s[j]) / (self.s[j + 1] - self.s[j]);
        self.psi[j] * (1.0 - t) + self.psi[j + 1] * t
    }

    /// Cumulative MA mass of the disc `|z| <= r`.
    pub fn mass_within(&self, r: f64) -> f64 {
        let s = (r * r).ln();
        let n = self.s.len();
        let j = self.s.partition_point(|&x| x <= s);
        if j == 0 {
            return 0.0;
        }
        if j >= n {
            return self.total_mass();
        }
        self.m[j - 1]
    }

    /// Radius at which the cumulative mass first reaches `level`.
    pub fn radius_at_mass(&self, level: f64) -> f64 {
        let n = self.s.len();
        for i in 0..n {
            if self.m[i] >= level {
                let s_edge = if i + 1 < n { 0.5 * (self.s[i] + self.s[i + 1]) } else { self.s[i] };
                return (0.5 * s_edge).exp();
            }
        }
        f64::INFINITY
    }

    /// CSV with columns `s,psi,m`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,psi,m\n");
        for i in 0..self.s.len() {
            let _ = writeln!(out, "{},{},{}", self.s[i], self.psi[i], self.m[i]);
        }
        out
    }

    pub fn sup_distance(&self, other: &RadialProfile) -> f64 {
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Closed-form limiting laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ClosedFormMeasure {
    /// `pi^-1 (1 - x^2)^-1/2` on `[-1, 1]`.
    Arcsine,
    /// `(2/pi) (1 - x^2)^1/2` on `[-1, 1]`.
    Semicircle,
    /// Uniform probability on the disc of the given radius (radial law of `|z|`).
    UniformDisc { radius: f64 },
    /// `pi^-1 (1 + |z|^2)^-2 dlambda`, the invariant measure of the sphere.
    FubiniStudySphere,
}

impl ClosedFormMeasure {
    /// Whether the evaluators describe the law of `|z|` rather than of `x`.
    pub fn is_radial(&self) -> bool {
        matches!(self, ClosedFormMeasure::UniformDisc { .. } | ClosedFormMeasure::FubiniStudySphere)
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            ClosedFormMeasure::Arcsine | ClosedFormMeasure::Semicircle => (-1.0, 1.0),
            ClosedFormMeasure::UniformDisc { radius } => (0.0, radius),
            ClosedFormMeasure::FubiniStudySphere => (0.0, f64::INFINITY),
        }
    }

    /// Density of the 1D law (for radial measures: density of `|z|`).
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            ClosedFormMeasure::Arcsine => {
                if x.abs() < 1.0 {
                    1.0 / (PI * (1.0 - x * x).sqrt())
                } else {
                    0.0
                }
            }
            ClosedFormMeasure::Semicircle => {
                if x.abs() <= 1.0 {
                    2.0 / PI * (1.0 - x * x).sqrt()
                } else {
                    0.0
                }
            }
            ClosedFormMeasure::UniformDisc { radius } => {
                if (0.0..=radius).contains(&x) {
                    2.0 * x / (radius * radius)
                } else {
                    0.0
                }
            }
            ClosedFormMeasure::FubiniStudySphere => {
                if x >= 0.0 {
                    2.0 * x / (1.0 + x * x).powi(2)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ClosedFormMeasure::Arcsine => 0.5 + x.clamp(-1.0, 1.0).asin() / PI,
            ClosedFormMeasure::Semicircle => {
                let x = x.clamp(-1.0, 1.0);
                0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / PI
            }
            ClosedFormMeasure::UniformDisc { radius } => (x.max(0.0) / radius).min(1.0).powi(2),
            ClosedFormMeasure::FubiniStudySphere => {
                let x = x.max(0.0);
                x * x / (1.0 + x * x)
            }
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match *self {
            ClosedFormMeasure::Arcsine => (PI * (q - 0.5)).sin(),
            ClosedFormMeasure::UniformDisc { radius } => radius * q.sqrt(),
            ClosedFormMeasure::FubiniStudySphere => {
                if q >= 1.0 {
                    f64::INFINITY
                } else {
                    (q / (1.0 - q)).sqrt()
                }
            }
            ClosedFormMeasure::Semicircle => {
                let (mut lo, mut hi) = (-1.0, 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < q {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

/// Look up a closed-form law: `arcsine`, `semicircle`, `uniform-disc`,
/// `uniform-disc(<radius>)`, `fubini-study-sphere`.
pub fn preset_equilibrium(name: &str) -> Result<ClosedFormMeasure> {
    let name = name.trim();
    match name {
        "arcsine" => return Ok(ClosedFormMeasure::Arcsine),
        "semicircle" => return Ok(ClosedFormMeasure::Semicircle),
        "uniform-disc" => return Ok(ClosedFormMeasure::UniformDisc { radius: 1.0 }),
        "fubini-study-sphere" => return Ok(ClosedFormMeasure::FubiniStudySphere),
        _ => {}
    }
    if let Some(arg) = name.strip_prefix("uniform-disc(").and_then(|r| r.strip_suffix(')')) {
        if let Ok(radius) = arg.trim().parse::<f64>() {
            if radius > 0.0 {
                return Ok(ClosedFormMeasure::UniformDisc { radius });
            }
        }
    }
    Err(Error::UnknownPreset(name.to_string()))
}

fn check_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.len() < 3 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadGrid("grid must be strictly increasing with at least 3 nodes".into()));
    }
    Ok(())
}

fn dual_widths(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { 0.5 * (s[i] - s[i - 1]) };
            let right = if i + 1 == n { 0.0 } else { 0.5 * (s[i + 1] - s[i]) };
            left + right
        })
        .collect()
}

/// Newton iteration report of the mean-field solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Max over dual cells of |MA mass - RHS mass|.
    pub residual: f64,
}

/// Residual tolerance of the mean-field solver.
pub const MFE_TOLERANCE: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 30;

struct MfeProblem<'a> {
    s: &'a [f64],
    widths: Vec<f64>,
    /// log of pi e^s rho(s) e^{-beta phi(s)} at each node
    log_g: Vec<f64>,
    beta: f64,
}

impl MfeProblem<'_> {
    fn residual(&self, psi: &[f64], out: &mut [f64], rhs: &mut [f64]) -> f64 {
        let n = psi.len();
        let mut norm: f64 = 0.0;
        for i in 0..n {
            let right = if i + 1 < n { (psi[i + 1] - psi[i]) / (self.s[i + 1] - self.s[i]) } else { 1.0 };
            let left = if i == 0 { 0.0 } else { (psi[i] - psi[i - 1]) / (self.s[i] - self.s[i - 1]) };
            rhs[i] = self.widths[i] * (self.log_g[i] + self.beta * psi[i]).exp();
            out[i] = right - left - rhs[i];
            norm = norm.max(out[i].abs());
        }
        if norm.is_nan() {
            f64::INFINITY
        } else {
            norm
        }
    }

    fn solve(&self, mut psi: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>, SolveStats)> {
        let n = psi.len();
        let mut f = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut norm = self.residual(&psi, &mut f, &mut rhs);
        let mut trial = vec![0.0; n];
        let mut f_trial = vec![0.0; n];
        let mut rhs_trial = vec![0.0; n];
        let mut iterations = 0;
        while iterations < NEWTON_MAX_ITER {
            if norm < 1e-13 {
                break;
            }
            iterations += 1;
            let mut sub = vec![0.0; n - 1];
            let mut sup = vec![0.0; n - 1];
            let mut diag = vec![0.0; n];
            for i in 0..n {
                diag[i] = -self.beta * rhs[i];
                if i + 1 < n {
                    let c = 1.0 / (self.s[i + 1] - self.s[i]);
                    sup[i] = c;
                    diag[i] -= c;
                }
                if i > 0 {
                    let c = 1.0 / (self.s[i] - self.s[i - 1]);
                    sub[i - 1] = c;
                    diag[i] -= c;
                }
            }
            let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
            let step = solve_tridiagonal(&sub, &diag, &sup, &neg_f);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                for i in 0..n {
                    trial[i] = psi[i] + t * step[i];
                }
                let nt = self.residual(&trial, &mut f_trial, &mut rhs_trial);
                if nt < norm {
                    std::mem::swap(&mut psi, &mut trial);
                    std::mem::swap(&mut f, &mut f_trial);
                    std::mem::swap(&mut rhs, &mut rhs_trial);
                    norm = nt;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if !(norm < MFE_TOLERANCE) {
            return Err(Error::NoConvergence { iterations, residual: norm });
        }
        Ok((psi, rhs, SolveStats { iterations, residual: norm }))
    }
}

/// Radial solution of `MA(psi) = e^{beta(psi - phi)} dV` in one variable.
pub fn solve_mfe_radial(weight: &Weight, base: &BaseMeasure, beta: f64, s_grid: &[f64]) -> Result<RadialProfile> {
    solve_mfe_radial_with_stats(weight, base, beta, s_grid).map(|(p, _)| p)
}

pub fn solve_mfe_radial_with_stats(
    weight: &Weight,
    base: &BaseMeasure,
    beta: f64,
    s_grid: &[f64],
) -> Result<(RadialProfile, SolveStats)> {
    check_grid(s_grid)?;
    if base.is_singular() {
        return Err(Error::InvalidInput("mean-field solver needs a base measure with a density".into()));
    }
    let verdict = admissibility_check(weight, base, beta, 1)?;
    if !verdict.is_ok() {
        return Err(Error::NotAdmissible(format!("{verdict:?}")));
    }
    let log_g: Vec<f64> = s_grid
        .iter()
        .map(|&s| PI.ln() + s + base.radial_log_density(s) - beta * weight.profile(s))
        .collect();
    let problem = MfeProblem { s: s_grid, widths: dual_widths(s_grid), log_g, beta };

    let mut guesses = Vec::new();
    if let Ok(env) = weighted_extremal_radial(weight, s_grid) {
        guesses.push(env.psi().to_vec());
    }
    guesses.push(mass_guess(&problem));
    let mut last_err = None;
    for guess in guesses {
        match problem.solve(guess) {
            Ok(sol) => return Ok(finish_mfe(s_grid, sol)),
            Err(e) => last_err = Some(e),
        }
    }
    // Continuation in beta from a smaller inverse temperature.
    let mut b = beta / 8.0;
    let mut psi = None;
    while b < beta {
        let p = MfeProblem {
            s: s_grid,
            widths: problem.widths.clone(),
            log_g: shift_log_g(&problem, beta, b, weight),
            beta: b,
        };
        let start = psi.clone().unwrap_or_else(|| mass_guess(&p));
        match p.solve(start) {
            Ok((sol, _, _)) => psi = Some(sol),
            Err(e) => return Err(last_err.unwrap_or(e)),
        }
        b *= 2.0;
    }
    match problem.solve(psi.unwrap_or_else(|| mass_guess(&problem))) {
        Ok(sol) => Ok(finish_mfe(s_grid, sol)),
        Err(e) => Err(e),
    }
}

fn shift_log_g(p: &MfeProblem, beta: f64, b: f64, weight: &Weight) -> Vec<f64> {
    p.log_g
        .iter()
        .zip(p.s)
        .map(|(&lg, &s)| lg + (beta - b) * weight.profile(s))
        .collect()
}

fn finish_mfe(s_grid: &[f64], (psi, rhs, stats): (Vec<f64>, Vec<f64>, SolveStats)) -> (RadialProfile, SolveStats) {
    let n = psi.len();
    let mut m: Vec<f64> = (0..n - 1)
        .map(|i| (psi[i + 1] - psi[i]) / (s_grid[i + 1] - s_grid[i]))
        .collect();
    m.push(m[n - 2] + rhs[n - 1]);
    (RadialProfile::from_parts(s_grid.to_vec(), psi, m), stats)
}

/// Starting point from the normalized RHS density at `psi = 0`, integrated
/// twice and shifted so its RHS mass is one.
fn mass_guess(p: &MfeProblem) -> Vec<f64> {
    let n = p.s.len();
    let lmax = p.log_g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = (0..n).map(|i| p.widths[i] * (p.log_g[i] - lmax).exp()).collect();
    let tot: f64 = w.iter().sum();
    let mut psi = vec![0.0; n];
    let mut cum = 0.0;
    for i in 0..n - 1 {
        cum += w[i] / tot;
        psi[i + 1] = psi[i] + (p.s[i + 1] - p.s[i]) * cum;
    }
    // choose the constant c with sum widths e^{log_g + beta (psi + c)} = 1
    let terms: Vec<f64> = (0..n).map(|i| p.widths[i].ln() + p.log_g[i] + p.beta * psi[i]).collect();
    let tmax = terms.iter().cloned().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let lse = tmax + terms.iter().map(|t| (t - tmax).exp()).sum::<f64>().ln();
    let c = -lse / p.beta;
    psi.iter().map(|v| v + c).collect()
}

/// Dual-cell masses of a radial probability base measure on the grid, with the
/// mass beyond either end lumped into the end cells.
pub fn base_cell_masses(base: &BaseMeasure, s_grid: &[f64]) -> Result<Vec<f64>> {
    if !base.is_probability() {
        return Err(Error::NonProbabilityBase);
    }
    let n = s_grid.len();
    if base.radial_cdf(1.0).is_some() {
        let edge_cdf = |i: usize| {
            let s_edge = 0.5 * (s_grid[i] + s_grid[i + 1]);
            base.radial_cdf((0.5 * s_edge).exp()).unwrap()
        };
        let mut out = Vec::with_capacity(n);
        let mut prev = 0.0;
        for i in 0..n {
            let next = if i + 1 < n { edge_cdf(i) } else { 1.0 };
            out.push(next - prev);
            prev = next;
        }
        return Ok(out);
    }
    if let BaseKind::LebesgueOnDomain { .. } | BaseKind::RadialDensity { .. } = base.kind {
        let widths = dual_widths(s_grid);
        let raw: Vec<f64> = (0..n)
            .map(|i| widths[i] * (PI.ln() + s_grid[i] + base.radial_log_density(s_grid[i])).exp())
            .collect();
        let tot: f64 = raw.iter().sum();
        return Ok(raw.into_iter().map(|v| v / tot).collect());
    }
    Err(Error::InvalidInput("base measure is not radial".into()))
}

/// Radial solution of `MA(psi) = dV` normalized by `int (psi - phi) dV = 0`.
pub fn solve_cy_radial(base: &BaseMeasure, weight: &Weight, s_grid: &[f64]) -> Result<RadialProfile> {
    check_grid(s_grid)?;
    let masses = base_cell_masses(base, s_grid)?;
    let n = s_grid.len();
    let mut m = Vec::with_capacity(n);
    let mut cum = 0.0;
    for &w in &masses {
        cum += w;
        m.push(cum);
    }
    let last = n - 1;
    m[last] = 1.0;
    let mut psi = vec![0.0; n];
    for i in 0..n - 1 {
        psi[i + 1] = psi[i] + (s_grid[i + 1] - s_grid[i]) * m[i];
    }
    let phi: Vec<f64> = s_grid.iter().map(|&s| weight.profile(s)).collect();
    let shift: f64 = (0..n)
        .filter(|&i| masses[i] > 0.0)
        .map(|i| (phi[i] - psi[i]) * masses[i])
        .sum();
    if !shift.is_finite() {
        return Err(Error::InvalidInput("weight is infinite on the support of dV".into()));
    }
    for v in &mut psi {
        *v += shift;
    }
    Ok(RadialProfile::from_parts(s_grid.to_vec(), psi, m))
}

/// `int (psi - phi) dV` on the discrete base measure.
pub fn cy_normalization_residual(profile: &RadialProfile, base: &BaseMeasure, weight: &Weight) -> Result<f64> {
    let masses = base_cell_masses(base, profile.s())?;
    Ok(profile
        .s()
        .iter()
        .zip(profile.psi())
        .zip(&masses)
        .filter(|(_, &w)| w > 0.0)
        .map(|((&s, &p), &w)| (p - weight.profile(s)) * w)
        .sum())
}

/// One row of a temperature sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    /// sup |psi_beta - psi_phi| when the envelope exists on the grid.
    pub gap_envelope: Option<f64>,
    /// sup |psi_beta - psi_0| when `dV` is a probability measure.
    pub gap_cy: Option<f64>,
    pub residual: Option<f64>,
    /// Radius enclosing 99.9% of the equilibrium mass.
    pub support_radius: Option<f64>,
    pub error: Option<String>,
}

/// Solve at every `beta` (in parallel) and report the distance to both limits.
pub fn temperature_sweep(weight: &Weight, base: &BaseMeasure, betas: &[f64], s_grid: &[f64]) -> Vec<SweepRow> {
    let envelope = weighted_extremal_radial(weight, s_grid).ok();
    let cy = solve_cy_radial(base, weight, s_grid).ok();
    betas
        .par_iter()
        .map(|&beta| match solve_mfe_radial_with_stats(weight, base, beta, s_grid) {
            Ok((p, stats)) => SweepRow {
                beta,
                gap_envelope: envelope.as_ref().map(|e| p.sup_distance(e)),
                gap_cy: cy.as_ref().map(|c| p.sup_distance(c)),
                residual: Some(stats.residual),
                support_radius: Some(p.radius_at_mass(0.999)),
                error: None,
            },
            Err(e) => SweepRow {
                beta,
                gap_envelope: None,
                gap_cy: None,
                residual: None,
                support_radius: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("beta,gap_envelope,gap_cy,residual,support_radius,status\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.beta,
            opt(r.gap_envelope),
            opt(r.gap_cy),
            opt(r.residual),
            opt(r.support_radius),
            if r.error.is_some() { "failed" } else { "ok" }
        );
    }
    out
}
