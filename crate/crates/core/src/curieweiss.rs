//! The Curie-Weiss spin model: free energy, mean-field fixed points and the
//! exact finite-`N` law of the magnetization.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ferromagnetic (`H = -N m^2 / 2`) or antiferromagnetic (`H = +N m^2 / 2`) coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    Ferro,
    Antiferro,
}

impl Coupling {
    fn sign(self) -> f64 {
        match self {
            Coupling::Ferro => 1.0,
            Coupling::Antiferro => -1.0,
        }
    }

    /// Inverse temperature at which the minimizer of `F` stops being unique.
    pub fn critical_beta(self) -> f64 {
        self.sign()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwParams {
    pub beta: f64,
    pub h: f64,
    pub n: usize,
    pub coupling: Coupling,
}

/// `(1+m)/2 log((1+m)/2) + (1-m)/2 log((1-m)/2)` with `0 log 0 = 0`.
fn neg_entropy(m: f64) -> f64 {
    let xlogx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    xlogx(0.5 * (1.0 + m)) + xlogx(0.5 * (1.0 - m))
}

/// `F(m) = -m^2/2 - h m + beta^{-1} [neg. entropy]` (ferro; the quadratic
/// term changes sign for antiferro).
pub fn cw_free_energy(m: f64, beta: f64, h: f64, coupling: Coupling) -> f64 {
    -coupling.sign() * 0.5 * m * m - h * m + neg_entropy(m) / beta
}

/// Ferromagnetic [`cw_free_energy`].
pub fn cw_free_energy_ferro(m: f64, beta: f64, h: f64) -> f64 {
    cw_free_energy(m, beta, h, Coupling::Ferro)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Minimum,
    Maximum,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub m: f64,
    pub free_energy: f64,
    pub stability: Stability,
}

/// Every solution of `m = tanh(beta (s m + h))` in `[-1, 1]` (`s = ±1` by
/// coupling), in increasing order, labelled by the sign of `F''`.
pub fn cw_magnetization(beta: f64, h: f64, coupling: Coupling) -> Vec<FixedPoint> {
    let s = coupling.sign();
    let g = |m: f64| (beta * (s * m + h)).tanh() - m;
    let scan = 20_000;
    let bisect = |mut lo: f64, mut hi: f64| {
        let mut glo = g(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-15 {
                break;
            }
            let gm = g(mid);
            if gm == 0.0 {
                return mid;
            }
            if (gm > 0.0) == (glo > 0.0) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let roots_on = |lo: f64, hi: f64| {
        let mut roots = Vec::new();
        let pts: Vec<f64> = (0..=scan).map(|i| lo + (hi - lo) * i as f64 / scan as f64).collect();
        for w in pts.windows(2) {
            let (a, b) = (g(w[0]), g(w[1]));
            if a == 0.0 {
                roots.push(w[0]);
            } else if a * b < 0.0 {
                roots.push(bisect(w[0], w[1]));
            }
        }
        if g(hi) == 0.0 {
            roots.push(hi);
        }
        roots
    };
    let mut roots: Vec<f64> = if h == 0.0 {
        // odd equation: solve on [0, 1] and mirror
        let pos = roots_on(0.0, 1.0);
        let mut all: Vec<f64> = pos.iter().filter(|&&m| m > 0.0).map(|m| -m).collect();
        all.extend(pos);
        all
    } else {
        roots_on(-1.0, 1.0)
    };
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    roots
        .into_iter()
        .map(|m| {
            let f2 = -s + 1.0 / (beta * (1.0 - m * m));
            let stability = if f2.abs() < 1e-9 {
                Stability::Degenerate
            } else if f2 > 0.0 {
                Stability::Minimum
            } else {
                Stability::Maximum
            };
            FixedPoint { m, free_energy: cw_free_energy(m, beta, h, coupling), stability }
        })
        .collect()
}

/// Exact law of `m_N` and the large-deviation rate on a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteN {
    pub params: CwParams,
    /// Values `(2j - N)/N`, `j = 0..=N`.
    pub m: Vec<f64>,
    pub prob: Vec<f64>,
    /// `log sum_x e^{-beta H(x)}` over `2^N` spin configurations.
    pub log_partition: f64,
    /// `E[H]` with `H = -N (s m^2/2 + h m)`.
    pub mean_energy: f64,
    /// The window clipped to `[-1, 1]`.
    pub window: (f64, f64),
    /// `-(beta N)^{-1} log P(m_N in window)`.
    pub rate: f64,
    /// `inf_window F - min_[-1,1] F`.
    pub gap: f64,
}

/// `P(m_N = (2j - N)/N) ∝ binom(N, j) exp(beta N (s m^2/2 + h m))`, summed in log space.
pub fn cw_finite_n(params: CwParams, window: (f64, f64)) -> Result<FiniteN> {
    let CwParams { beta, h, n, coupling } = params;
    if n == 0 || n > 1_000_000 {
        return Err(Error::InvalidInput(format!("need 1 <= N <= 10^6, got {n}")));
    }
    let (lo, hi) = window;
    if !(lo <= hi) || lo > 1.0 || hi < -1.0 {
        return Err(Error::WindowOutOfRange { lo, hi });
    }
    // the part of the window inside [-1, 1]
    let (lo, hi) = (lo.max(-1.0), hi.min(1.0));
    let s = coupling.sign();
    let nf = n as f64;
    let m: Vec<f64> = (0..=n).map(|j| (2 * j) as f64 / nf - 1.0).collect();
    let energy = |mj: f64| -nf * (s * 0.5 * mj * mj + h * mj);
    let mut log_binom = vec![0.0; n + 1];
    for j in 0..n {
        log_binom[j + 1] = log_binom[j] + ((n - j) as f64).ln() - ((j + 1) as f64).ln();
    }
    let logw: Vec<f64> = (0..=n).map(|j| log_binom[j] - beta * energy(m[j])).collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logw.iter().map(|l| (l - top).exp()).sum();
    let log_partition = top + total.ln();
    let prob: Vec<f64> = logw.iter().map(|l| (l - top).exp() / total).collect();
    let mean_energy = prob.iter().zip(&m).map(|(p, &mj)| p * energy(mj)).sum();
    let inside: Vec<f64> = (0..=n).filter(|&j| m[j] >= lo && m[j] <= hi).map(|j| logw[j]).collect();
    let rate = if inside.is_empty() {
        f64::INFINITY
    } else {
        let t = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_p = t + inside.iter().map(|l| (l - t).exp()).sum::<f64>().ln() - log_partition;
        -log_p / (beta * nf)
    };
    let f = |x: f64| cw_free_energy(x, beta, h, coupling);
    let grid = |a: f64, b: f64, k: usize| (0..=k).map(move |i| a + (b - a) * i as f64 / k as f64);
    let mut fmin = grid(-1.0, 1.0, 200_000).map(f).fold(f64::INFINITY, f64::min);
    for fp in cw_magnetization(beta, h, coupling) {
        fmin = fmin.min(fp.free_energy);
    }
    let mut fwin = grid(lo, hi, 20_000).map(f).fold(f64::INFINITY, f64::min);
    for fp in cw_magnetization(beta, h, coupling) {
        if fp.m >= lo && fp.m <= hi {
            fwin = fwin.min(fp.free_energy);
        }
    }
    Ok(FiniteN { params, m, prob, log_partition, mean_energy, window: (lo, hi), rate, gap: fwin - fmin })
}

/// One row of a phase table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub beta: f64,
    pub h: f64,
    pub fixed_points: Vec<FixedPoint>,
}

pub fn phase_table(betas: &[f64], hs: &[f64], coupling: Coupling) -> Vec<PhaseRow> {
    betas
        .iter()
        .flat_map(|&beta| hs.iter().map(move |&h| PhaseRow { beta, h, fixed_points: cw_magnetization(beta, h, coupling) }))
        .collect()
}

/// `beta,h,m,F,stability`, one line per fixed point.
pub fn phase_table_csv(rows: &[PhaseRow]) -> String {
    let mut out = String::from("beta,h,m,F,stability\n");
    for r in rows {
        for fp in &r.fixed_points {
            let label = match fp.stability {
                Stability::Minimum => "min",
                Stability::Maximum => "max",
                Stability::Degenerate => "degenerate",
            };
            let _ = writeln!(out, "{},{},{},{},{}", r.beta, r.h, fp.m, fp.free_energy, label);
        }
    }
    out
}
