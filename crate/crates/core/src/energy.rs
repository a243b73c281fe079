//! Microscopic energies of point configurations.
//!
//! The Gibbs ensemble of `N_k` random interpolation nodes has density
//! `|D|^{2 beta / k} e^{-beta sum phi(z_i)}` against `dV^{N_k}`, i.e.
//! `exp(-beta H)` with the weighted Hamiltonian
//! `H = -(1/k) log |D|^2 + sum_i phi(z_i)`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polybasis::{grad_log_abs_det2, log_abs_det2, Configuration, Mode, MultiIndexBasis};
use crate::rng::substream;
use crate::weights::{admissibility_check, Admissibility, BaseMeasure, BaseSampler, Weight};

/// Weight, base measure, degree and inverse temperature of a Gibbs ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleModel {
    basis: MultiIndexBasis,
    pub weight: Weight,
    pub base: BaseMeasure,
    beta: f64,
    mode: Mode,
    admissibility: Option<Admissibility>,
}

impl EnsembleModel {
    /// Model at finite `beta > 0`; refuses inadmissible data.
    pub fn new(n: usize, k: usize, weight: Weight, base: BaseMeasure, beta: f64, mode: Mode) -> Result<Self> {
        let basis = MultiIndexBasis::new(n, k)?;
        if mode == Mode::RealTropical {
            return Err(Error::InvalidInput("tropical ensembles live in the tropical module".into()));
        }
        if beta == f64::INFINITY {
            return Ok(EnsembleModel { basis, weight, base, beta, mode, admissibility: None });
        }
        let verdict = admissibility_check(&weight, &base, beta, n)?;
        if !verdict.is_ok() {
            return Err(Error::NotAdmissible(format!("{verdict:?}")));
        }
        Ok(EnsembleModel { basis, weight, base, beta, mode, admissibility: Some(verdict) })
    }

    /// Zero-temperature model (`beta = +inf`), used for Fekete problems.
    pub fn zero_temperature(n: usize, k: usize, weight: Weight, base: BaseMeasure, mode: Mode) -> Result<Self> {
        Self::new(n, k, weight, base, f64::INFINITY, mode)
    }

    pub fn basis(&self) -> &MultiIndexBasis {
        &self.basis
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.basis.dimension()
    }

    pub fn k(&self) -> usize {
        self.basis.degree()
    }

    /// `N_k`, the number of particles.
    pub fn particles(&self) -> usize {
        self.basis.size()
    }

    pub fn admissibility(&self) -> Option<Admissibility> {
        self.admissibility
    }

    /// Same data at another inverse temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.n(), self.k(), self.weight.clone(), self.base.clone(), beta, self.mode)
    }

    /// `-(1/k) log |D|^2`, zero for a single particle.
    fn interaction(&self, config: &Configuration) -> Result<f64> {
        if self.k() == 0 {
            return Ok(0.0);
        }
        let l = log_abs_det2(&self.basis, config)?;
        Ok(if l == f64::NEG_INFINITY { f64::INFINITY } else { -l / self.k() as f64 })
    }

    /// `log` of the Gibbs density `exp(-beta H) prod dV(z_i)` against Lebesgue
    /// measure, `-inf` where it vanishes.
    pub fn log_target(&self, config: &Configuration) -> Result<f64> {
        let h = weighted_hamiltonian(self, config)?;
        if h == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let mut lv = -self.beta * h;
        for p in config.points() {
            lv += self.base.log_density(p, self.mode);
        }
        Ok(lv)
    }
}

/// `E = -(1/(N_k k)) log |D|^2`, `+inf` on singular configurations.
pub fn determinantal_energy(model: &EnsembleModel, config: &Configuration) -> Result<f64> {
    if model.k() == 0 {
        return Err(Error::DegenerateDegree);
    }
    let l = log_abs_det2(&model.basis, config)?;
    if l == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(-l / (model.particles() * model.k()) as f64)
}

/// `H = -(1/k) log |D|^2 + sum_i phi(z_i)`.
pub fn weighted_hamiltonian(model: &EnsembleModel, config: &Configuration) -> Result<f64> {
    let inter = model.interaction(config)?;
    let mut total = inter;
    for i in config.canonical_order() {
        total += model.weight.value(config.point(i));
    }
    Ok(total)
}

/// Real gradient of `H`, point by point `[re_1..re_n, im_1..im_n]`.
pub fn hamiltonian_gradient(model: &EnsembleModel, config: &Configuration) -> Result<Vec<f64>> {
    let n = model.n();
    let mut g = if model.k() == 0 {
        vec![0.0; 2 * n * config.len()]
    } else {
        let mut g = grad_log_abs_det2(&model.basis, config)?;
        let inv_k = 1.0 / model.k() as f64;
        for v in &mut g {
            *v *= -inv_k;
        }
        g
    };
    for (i, p) in config.points().enumerate() {
        let gw = model
            .weight
            .gradient(p)
            .ok_or_else(|| Error::GradientUndefined("weight is infinite at a particle".into()))?;
        for (slot, v) in gw.into_iter().enumerate() {
            g[i * 2 * n + slot] += v;
        }
    }
    if model.mode != Mode::Complex {
        for i in 0..config.len() {
            for l in 0..n {
                g[i * 2 * n + n + l] = 0.0;
            }
        }
    }
    Ok(g)
}

/// One-variable pair energy `(1/(N(N-1))) (1/2) sum_{i != j} -log |z_i - z_j|^2`.
pub fn pair_energy(points: &[C64]) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = (points[i] - points[j]).norm_sqr();
                if d == 0.0 {
                    return f64::INFINITY;
                }
                total -= 0.5 * d.ln();
            }
        }
    }
    total / (n * (n - 1)) as f64
}

/// Monte Carlo estimate of `psi_k(z) = (1/k) E[log |D(z, z_2..z_N)|^2]` with
/// `z_2..z_N` i.i.d. from the base measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreenEstimate {
    pub grid: Vec<Vec<C64>>,
    /// Estimates centred to mean zero over the grid.
    pub values: Vec<f64>,
    /// Uncentred sample means.
    pub raw: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub samples: usize,
}

const GREEN_BLOCK: usize = 256;

/// Estimate `psi_k` on `grid` from `samples` draws of the remaining `N_k - 1`
/// nodes. The same draws are shared by all grid points.
pub fn green_formula_estimate(
    model: &EnsembleModel,
    grid: &[Vec<C64>],
    samples: usize,
    seed: u64,
) -> Result<GreenEstimate> {
    if model.k() == 0 {
        return Err(Error::DegenerateDegree);
    }
    if samples < 100 {
        return Err(Error::InsufficientSamples { got: samples, need: 100 });
    }
    if !model.base.is_probability() {
        return Err(Error::NonProbabilityBase);
    }
    let n = model.n();
    if grid.iter().any(|z| z.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: grid.iter().map(|z| z.len()).find(|&l| l != n).unwrap_or(n) });
    }
    let sampler = BaseSampler::new(&model.base, n, model.mode)?;
    let npart = model.particles();
    let kf = model.k() as f64;
    let blocks = samples.div_ceil(GREEN_BLOCK);
    let partial: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let count = GREEN_BLOCK.min(samples - b * GREEN_BLOCK);
            let mut sum = vec![0.0; grid.len()];
            let mut sum2 = vec![0.0; grid.len()];
            let mut coords = vec![C64::new(0.0, 0.0); npart * n];
            for _ in 0..count {
                for j in 1..npart {
                    let p = sampler.sample(&mut rng);
                    coords[j * n..(j + 1) * n].copy_from_slice(&p);
                }
                for (g, z) in grid.iter().enumerate() {
                    coords[..n].copy_from_slice(z);
                    let config = Configuration::new(n, model.mode, coords.clone())?;
                    let v = log_abs_det2(&model.basis, &config)? / kf;
                    sum[g] += v;
                    sum2[g] += v * v;
                }
            }
            Ok((sum, sum2))
        })
        .collect();
    let mut sum = vec![0.0; grid.len()];
    let mut sum2 = vec![0.0; grid.len()];
    for r in partial {
        let (a, b) = r?;
        for g in 0..grid.len() {
            sum[g] += a[g];
            sum2[g] += b[g];
        }
    }
    let m = samples as f64;
    let raw: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let std_errors: Vec<f64> = (0..grid.len())
        .map(|g| {
            let var = (sum2[g] / m - raw[g] * raw[g]).max(0.0) * m / (m - 1.0);
            (var / m).sqrt()
        })
        .collect();
    let finite: Vec<f64> = raw.iter().copied().filter(|v| v.is_finite()).collect();
    let centre = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
    let values = raw.iter().map(|v| v - centre).collect();
    Ok(GreenEstimate { grid: grid.to_vec(), values, raw, std_errors, samples })
}
