//! Markov chain Monte Carlo for the Gibbs ensembles and the Fekete search.
//!
//! One sweep is a single whole-configuration proposal: Metropolis-adjusted
//! Langevin when the gradient of the log target exists, random-walk Metropolis
//! otherwise. Each chain owns a ChaCha substream, so output does not depend on
//! how chains are scheduled across threads.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{hamiltonian_gradient, weighted_hamiltonian, EnsembleModel};
use crate::error::{Error, Result};
use crate::polybasis::{log_abs_det2, Configuration, Mode};
use crate::rng::{substream, Rng};
use crate::weights::{admissibility_check, BaseKind, BaseSampler};

pub const MALA_TARGET: f64 = 0.574;
pub const RWM_TARGET: f64 = 0.234;
const MIN_ACCEPTANCE: f64 = 0.05;
const RECHECK_EVERY: usize = 1000;

/// How the inverse temperature evolves along a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    /// The model's own `beta` throughout.
    Fixed,
    /// Linear ramp from `start` to the model's `beta` over the burn-in.
    Ramp { start: f64 },
    /// `beta_t = beta0 * ratio^t`, capped at `beta_max`.
    Geometric { beta0: f64, ratio: f64, beta_max: f64 },
}

impl Schedule {
    fn validate(&self, model_beta: f64) -> Result<()> {
        match *self {
            Schedule::Fixed if !(model_beta.is_finite() && model_beta > 0.0) => Err(Error::InvalidInput(
                "a fixed schedule needs a finite positive beta".into(),
            )),
            Schedule::Ramp { start } if !(start > 0.0 && model_beta.is_finite()) => {
                Err(Error::InvalidInput("ramp needs start > 0 and a finite target".into()))
            }
            Schedule::Geometric { beta0, ratio, beta_max } if !(beta0 > 0.0 && ratio > 1.0 && beta_max >= beta0) => {
                Err(Error::InvalidInput("annealing needs beta0 > 0, ratio > 1, beta_max >= beta0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Smallest inverse temperature visited.
    fn min_beta(&self, model_beta: f64) -> f64 {
        match *self {
            Schedule::Fixed => model_beta,
            Schedule::Ramp { start } => start.min(model_beta),
            Schedule::Geometric { beta0, .. } => beta0,
        }
    }

    pub fn beta_at(&self, model_beta: f64, sweep: usize, burn_in: usize) -> f64 {
        match *self {
            Schedule::Fixed => model_beta,
            Schedule::Ramp { start } => {
                if burn_in == 0 || sweep >= burn_in {
                    model_beta
                } else {
                    start + (model_beta - start) * sweep as f64 / burn_in as f64
                }
            }
            Schedule::Geometric { beta0, ratio, beta_max } => (beta0 * ratio.powf(sweep as f64)).min(beta_max),
        }
    }
}

/// Movable real coordinates of a configuration: per point `re_1..re_n`, then
/// `im_1..im_n` in complex mode.
fn flatten(config: &Configuration) -> Vec<f64> {
    let complex = config.mode() == Mode::Complex;
    let mut v = Vec::new();
    for p in config.points() {
        v.extend(p.iter().map(|c| c.re));
        if complex {
            v.extend(p.iter().map(|c| c.im));
        }
    }
    v
}

fn unflatten(x: &[f64], n: usize, mode: Mode) -> Result<Configuration> {
    let complex = mode == Mode::Complex;
    let d = if complex { 2 * n } else { n };
    let mut coords = Vec::with_capacity(x.len() / d * n);
    for chunk in x.chunks(d) {
        for l in 0..n {
            coords.push(C64::new(chunk[l], if complex { chunk[n + l] } else { 0.0 }));
        }
    }
    Configuration::new(n, mode, coords)
}

/// Restrict a per-point `[re.., im..]` gradient to the movable coordinates.
fn restrict(g: &[f64], n: usize, mode: Mode) -> Vec<f64> {
    if mode == Mode::Complex {
        return g.to_vec();
    }
    g.chunks(2 * n).flat_map(|c| c[..n].to_vec()).collect()
}

/// Log target and (when defined) its gradient at inverse temperature `beta`.
fn evaluate(model: &EnsembleModel, beta: f64, x: &[f64]) -> Result<(f64, f64, Option<Vec<f64>>)> {
    let n = model.n();
    let mode = model.mode();
    let config = match unflatten(x, n, mode) {
        Ok(c) => c,
        Err(_) => return Ok((f64::NEG_INFINITY, f64::INFINITY, None)),
    };
    let h = weighted_hamiltonian(model, &config)?;
    let mut lv = if h == f64::INFINITY { f64::NEG_INFINITY } else { -beta * h };
    for p in config.points() {
        lv += model.base.log_density(p, mode);
    }
    if !lv.is_finite() {
        return Ok((f64::NEG_INFINITY, h, None));
    }
    let grad = match hamiltonian_gradient(model, &config) {
        Ok(gh) => {
            let mut g: Vec<f64> = gh.iter().map(|v| -beta * v).collect();
            for (i, p) in config.points().enumerate() {
                for (slot, v) in model.base.grad_log_density(p, mode).into_iter().enumerate() {
                    g[i * 2 * n + slot] += v;
                }
            }
            let g = restrict(&g, n, mode);
            if g.iter().all(|v| v.is_finite()) {
                Some(g)
            } else {
                None
            }
        }
        Err(Error::GradientUndefined(_)) => None,
        Err(e) => return Err(e),
    };
    Ok((lv, h, grad))
}

/// Metropolis-Hastings acceptance for a log acceptance ratio.
pub fn mh_accept<R: rand::Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if log_ratio.is_nan() || log_ratio == f64::NEG_INFINITY {
        return false;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// Current state of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: Configuration,
    x: Vec<f64>,
    pub hamiltonian: f64,
    log_target: f64,
    grad: Option<Vec<f64>>,
    pub step_mala: f64,
    pub step_rwm: f64,
    pub stream: u64,
    pub sweep: usize,
    pub accepted: usize,
    pub proposed: usize,
}

impl ChainState {
    fn new(model: &EnsembleModel, beta: f64, config: Configuration, stream: u64) -> Result<Self> {
        let x = flatten(&config);
        let (lt, h, grad) = evaluate(model, beta, &x)?;
        if !lt.is_finite() {
            return Err(Error::BadInit(format!("log target {lt} at the initial configuration")));
        }
        let scale = 1.0 / beta.max(1.0);
        Ok(ChainState {
            config,
            x,
            hamiltonian: h,
            log_target: lt,
            grad,
            step_mala: 0.1 * scale,
            step_rwm: 0.1 * scale,
            stream,
            sweep: 0,
            accepted: 0,
            proposed: 0,
        })
    }

    fn refresh(&mut self, model: &EnsembleModel, beta: f64) -> Result<()> {
        let (lt, h, grad) = evaluate(model, beta, &self.x)?;
        self.log_target = lt;
        self.hamiltonian = h;
        self.grad = grad;
        Ok(())
    }

    /// One proposal; returns the acceptance probability and whether MALA was used.
    fn step(&mut self, model: &EnsembleModel, beta: f64, rng: &mut Rng) -> Result<(f64, bool)> {
        let d = self.x.len();
        let xi: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let mala = self.grad.is_some();
        let h = if mala { self.step_mala } else { self.step_rwm };
        let noise = (2.0 * h).sqrt();
        let y: Vec<f64> = match &self.grad {
            Some(g) => (0..d).map(|i| self.x[i] + h * g[i] + noise * xi[i]).collect(),
            None => (0..d).map(|i| self.x[i] + noise * xi[i]).collect(),
        };
        let (lt_y, h_y, grad_y) = evaluate(model, beta, &y)?;
        let mut log_ratio = lt_y - self.log_target;
        if let (Some(gx), true) = (&self.grad, lt_y.is_finite()) {
            match &grad_y {
                Some(gy) => {
                    // log q(x | y) - log q(y | x)
                    let mut fwd = 0.0;
                    let mut bwd = 0.0;
                    for i in 0..d {
                        let a = y[i] - self.x[i] - h * gx[i];
                        let b = self.x[i] - y[i] - h * gy[i];
                        fwd += a * a;
                        bwd += b * b;
                    }
                    log_ratio += (fwd - bwd) / (4.0 * h);
                }
                // the reverse move would be a random-walk proposal
                None => log_ratio = f64::NEG_INFINITY,
            }
        }
        let alpha = if log_ratio.is_nan() { 0.0 } else { log_ratio.min(0.0).exp() };
        self.proposed += 1;
        if mh_accept(log_ratio, rng) {
            self.accepted += 1;
            self.x = y;
            self.log_target = lt_y;
            self.hamiltonian = h_y;
            self.grad = grad_y;
        }
        Ok((alpha, mala))
    }
}

/// Draws of one chain after burn-in and thinning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainOutput {
    pub chain: usize,
    pub sweeps: Vec<usize>,
    pub configs: Vec<Configuration>,
    pub acceptance: f64,
    pub step_mala: f64,
    pub step_rwm: f64,
    pub final_hamiltonian: f64,
}

/// Pooled output of `run_chain`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSet {
    pub n: usize,
    pub mode: Mode,
    pub chains: Vec<ChainOutput>,
}

impl SampleSet {
    /// Every sampled point of every retained configuration.
    pub fn pooled_points(&self) -> Vec<Vec<C64>> {
        self.chains
            .iter()
            .flat_map(|c| c.configs.iter())
            .flat_map(|cfg| cfg.points().map(|p| p.to_vec()))
            .collect()
    }

    pub fn acceptance(&self) -> f64 {
        self.chains.iter().map(|c| c.acceptance).sum::<f64>() / self.chains.len().max(1) as f64
    }

    /// `chain,sweep,particle,re_1..re_n,im_1..im_n`
    pub fn to_csv(&self) -> String {
        let n = self.n;
        let mut out = String::from("chain,sweep,particle");
        for l in 1..=n {
            let _ = write!(out, ",re_{l}");
        }
        for l in 1..=n {
            let _ = write!(out, ",im_{l}");
        }
        out.push('\n');
        for c in &self.chains {
            for (sweep, cfg) in c.sweeps.iter().zip(&c.configs) {
                for (i, p) in cfg.points().enumerate() {
                    let _ = write!(out, "{},{},{}", c.chain, sweep, i);
                    for z in p {
                        let _ = write!(out, ",{}", z.re);
                    }
                    for z in p {
                        let _ = write!(out, ",{}", z.im);
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Radius of the ball on which `phi <= phi_min + 20`, probed along the real axis.
fn init_radius(model: &EnsembleModel) -> f64 {
    let n = model.n();
    let phi = |r: f64| {
        let mut z = vec![C64::new(0.0, 0.0); n];
        z[0] = C64::new(r, 0.0);
        model.weight.value(&z)
    };
    let probes: Vec<f64> = (0..=600).map(|i| 1e-3 * 1.03f64.powi(i)).collect();
    let phi_min = probes
        .iter()
        .map(|&r| phi(r))
        .chain(std::iter::once(phi(0.0)))
        .fold(f64::INFINITY, f64::min);
    let mut radius = 0.0;
    for &r in &probes {
        if phi(r) <= phi_min + 20.0 {
            radius = r;
        }
    }
    if radius == 0.0 {
        1.0
    } else {
        radius
    }
}

/// Initial configuration: i.i.d. from the base measure truncated to the
/// effective potential well.
fn initial_config(model: &EnsembleModel, rng: &mut Rng) -> Result<Configuration> {
    let n = model.n();
    let mode = model.mode();
    let radius = init_radius(model);
    let sampler = match model.base.kind {
        BaseKind::Lebesgue => None,
        _ => Some(BaseSampler::new(&model.base, n, mode)?),
    };
    let uniform_ball = |rng: &mut Rng| -> Vec<C64> {
        let d = if mode == Mode::Complex { 2 * n } else { n };
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let u: f64 = rng.random();
        let r = radius * u.powf(1.0 / d as f64) / norm;
        (0..n)
            .map(|l| C64::new(r * v[l], if mode == Mode::Complex { r * v[n + l] } else { 0.0 }))
            .collect()
    };
    let mut coords = Vec::with_capacity(model.particles() * n);
    for _ in 0..model.particles() {
        let mut point = None;
        for _ in 0..10_000 {
            let z = match &sampler {
                Some(s) => s.sample(rng),
                None => uniform_ball(rng),
            };
            let r2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
            if r2 <= radius * radius && model.weight.value(&z).is_finite() {
                point = Some(z);
                break;
            }
        }
        let z = point.ok_or_else(|| Error::BadInit("no admissible starting point in the potential well".into()))?;
        coords.extend(z);
    }
    Configuration::new(n, mode, coords)
}

/// Run `chains` independent chains of `sweeps` sweeps each.
pub fn run_chain(
    model: &EnsembleModel,
    schedule: Schedule,
    sweeps: usize,
    chains: usize,
    seed: u64,
) -> Result<SampleSet> {
    schedule.validate(model.beta())?;
    let min_beta = schedule.min_beta(model.beta());
    let verdict = admissibility_check(&model.weight, &model.base, min_beta, model.n())?;
    if !verdict.is_ok() {
        return Err(Error::NotAdmissible(format!("{verdict:?} at beta = {min_beta}")));
    }
    if sweeps == 0 || chains == 0 {
        return Err(Error::InvalidInput("sweeps and chains must be positive".into()));
    }
    let outputs: Vec<Result<ChainOutput>> = (0..chains)
        .into_par_iter()
        .map(|c| run_one(model, schedule, sweeps, c, seed))
        .collect();
    let chains = outputs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SampleSet { n: model.n(), mode: model.mode(), chains })
}

fn run_one(model: &EnsembleModel, schedule: Schedule, sweeps: usize, chain: usize, seed: u64) -> Result<ChainOutput> {
    let mut rng = substream(seed, chain as u64);
    let burn_in = sweeps / 5;
    let thin = (sweeps / 10_000).max(1);
    let beta0 = schedule.beta_at(model.beta(), 0, burn_in);
    let init = initial_config(model, &mut rng)?;
    let mut state = ChainState::new(model, beta0, init, chain as u64)?;
    let mut out = ChainOutput {
        chain,
        sweeps: Vec::new(),
        configs: Vec::new(),
        acceptance: 0.0,
        step_mala: 0.0,
        step_rwm: 0.0,
        final_hamiltonian: 0.0,
    };
    let mut beta = beta0;
    let (mut post_acc, mut post_prop) = (0usize, 0usize);
    for t in 0..sweeps {
        let b = schedule.beta_at(model.beta(), t, burn_in);
        if b != beta {
            beta = b;
            state.refresh(model, beta)?;
        }
        let before = state.accepted;
        let (alpha, mala) = state.step(model, beta, &mut rng)?;
        state.sweep = t + 1;
        if t < burn_in {
            let gain = 1.0 / (1.0 + t as f64).powf(0.6);
            if mala {
                state.step_mala *= (gain * (alpha - MALA_TARGET)).exp();
            } else {
                state.step_rwm *= (gain * (alpha - RWM_TARGET)).exp();
            }
        } else {
            post_prop += 1;
            post_acc += state.accepted - before;
            if (t - burn_in).is_multiple_of(thin) {
                out.sweeps.push(t);
                out.configs.push(unflatten(&state.x, model.n(), model.mode())?);
            }
        }
        if (t + 1) % RECHECK_EVERY == 0 {
            let cached = state.hamiltonian;
            state.refresh(model, beta)?;
            debug_assert!((cached - state.hamiltonian).abs() <= 1e-10 * (1.0 + cached.abs()));
        }
    }
    state.config = unflatten(&state.x, model.n(), model.mode())?;
    out.acceptance = if post_prop > 0 { post_acc as f64 / post_prop as f64 } else { state.accepted as f64 / sweeps as f64 };
    if post_prop >= 100 && out.acceptance < MIN_ACCEPTANCE {
        return Err(Error::StepSizeFailure { acceptance: out.acceptance });
    }
    out.step_mala = state.step_mala;
    out.step_rwm = state.step_rwm;
    out.final_hamiltonian = state.hamiltonian;
    Ok(out)
}

/// Where Fekete points are sought.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Carrier {
    /// `|z| = radius` in one complex variable, parametrized by angles.
    Circle { radius: f64 },
    /// `[a, b]` on the real line.
    Interval { a: f64, b: f64 },
    /// `|z| <= radius` in `C^n`.
    Disc { radius: f64 },
    /// Every real coordinate in `[lo, hi]`.
    Box { lo: f64, hi: f64 },
}

/// Result of `fekete_search`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeketeResult {
    pub config: Configuration,
    /// `-(1/(N k)) log |D|^2`
    pub energy: f64,
    /// `-(1/(N k)) log |D|^2 + (1/N) sum phi`
    pub weighted_energy: f64,
    /// Weighted energy right after the annealing stage of the best restart.
    pub annealed_energy: f64,
    /// Weighted energy after each accepted polishing move of the best restart.
    pub history: Vec<f64>,
    pub restart: usize,
}

struct Problem<'a> {
    model: &'a EnsembleModel,
    carrier: Carrier,
}

impl Problem<'_> {
    fn dims_per_point(&self) -> usize {
        match self.carrier {
            Carrier::Circle { .. } => 1,
            Carrier::Interval { .. } => 1,
            _ if self.model.mode() == Mode::Complex => 2 * self.model.n(),
            _ => self.model.n(),
        }
    }

    fn to_config(&self, x: &[f64]) -> Result<Configuration> {
        match self.carrier {
            Carrier::Circle { radius } => {
                Configuration::from_complex(&x.iter().map(|&t| C64::from_polar(radius, t)).collect::<Vec<_>>())
            }
            Carrier::Interval { .. } => Configuration::from_real(x),
            _ => unflatten(x, self.model.n(), self.model.mode()),
        }
    }

    fn project(&self, x: &mut [f64]) {
        match self.carrier {
            Carrier::Circle { .. } => {
                for t in x.iter_mut() {
                    *t = t.rem_euclid(2.0 * PI);
                }
            }
            Carrier::Interval { a, b } => {
                for v in x.iter_mut() {
                    *v = v.clamp(a, b);
                }
            }
            Carrier::Box { lo, hi } => {
                for v in x.iter_mut() {
                    *v = v.clamp(lo, hi);
                }
            }
            Carrier::Disc { radius } => {
                for p in x.chunks_mut(self.dims_per_point()) {
                    let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if r > radius {
                        for v in p.iter_mut() {
                            *v *= radius / r;
                        }
                    }
                }
            }
        }
    }

    /// `k H = -log |D|^2 + k sum phi` and its gradient in the parameters.
    fn objective(&self, x: &[f64], with_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
        let config = self.to_config(x)?;
        let kf = self.model.k() as f64;
        let h = weighted_hamiltonian(self.model, &config)?;
        if !h.is_finite() {
            return Ok((f64::INFINITY, None));
        }
        if !with_grad {
            return Ok((kf * h, None));
        }
        let g = match hamiltonian_gradient(self.model, &config) {
            Ok(g) => g,
            Err(Error::GradientUndefined(_)) => return Ok((kf * h, None)),
            Err(e) => return Err(e),
        };
        let n = self.model.n();
        let grad = match self.carrier {
            Carrier::Circle { radius } => x
                .iter()
                .enumerate()
                .map(|(i, &t)| kf * radius * (-t.sin() * g[2 * i] + t.cos() * g[2 * i + 1]))
                .collect(),
            Carrier::Interval { .. } => (0..x.len()).map(|i| kf * g[2 * i]).collect(),
            _ => restrict(&g, n, self.model.mode()).into_iter().map(|v| kf * v).collect(),
        };
        Ok((kf * h, Some(grad)))
    }

    fn random_point(&self, rng: &mut Rng) -> Vec<f64> {
        let d = self.dims_per_point();
        match self.carrier {
            Carrier::Circle { .. } => vec![rng.random_range(0.0..2.0 * PI)],
            Carrier::Interval { a, b } => vec![rng.random_range(a..b)],
            Carrier::Box { lo, hi } => (0..d).map(|_| rng.random_range(lo..hi)).collect(),
            Carrier::Disc { radius } => {
                let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / d as f64) / norm;
                v.iter().map(|x| x * r).collect()
            }
        }
    }

    /// Deterministic candidate locations for exchange moves.
    fn candidates(&self) -> Vec<Vec<f64>> {
        let m = 256;
        match self.carrier {
            Carrier::Circle { .. } => (0..m).map(|i| vec![2.0 * PI * i as f64 / m as f64]).collect(),
            Carrier::Interval { a, b } => (0..=m).map(|i| vec![a + (b - a) * i as f64 / m as f64]).collect(),
            Carrier::Box { lo, hi } => {
                let d = self.dims_per_point();
                if d > 2 {
                    return Vec::new();
                }
                let side = 16;
                let pts: Vec<f64> = (0..=side).map(|i| lo + (hi - lo) * i as f64 / side as f64).collect();
                if d == 1 {
                    pts.iter().map(|&v| vec![v]).collect()
                } else {
                    pts.iter().flat_map(|&a| pts.iter().map(move |&b| vec![a, b])).collect()
                }
            }
            Carrier::Disc { radius } => {
                if self.dims_per_point() != 2 {
                    return Vec::new();
                }
                let mut out = Vec::new();
                for ring in 1..=8 {
                    let r = radius * ring as f64 / 8.0;
                    let count = 8 * ring;
                    for j in 0..count {
                        let t = 2.0 * PI * j as f64 / count as f64;
                        out.push(vec![r * t.cos(), r * t.sin()]);
                    }
                }
                out.push(vec![0.0, 0.0]);
                out
            }
        }
    }
}

/// Projected gradient descent with backtracking; only improving moves are taken.
fn polish(problem: &Problem, x: &mut Vec<f64>, value: &mut f64, history: &mut Vec<f64>, norm: f64) -> Result<()> {
    let mut step = 1e-2;
    for _ in 0..20_000 {
        let (_, grad) = problem.objective(x, true)?;
        let Some(g) = grad else { break };
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        let mut improved = false;
        for _ in 0..60 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            problem.project(&mut y);
            let (fy, _) = problem.objective(&y, false)?;
            if fy < *value {
                let gain = *value - fy;
                *x = y;
                *value = fy;
                history.push(fy / norm);
                improved = true;
                step *= 2.0;
                if gain <= 1e-15 * value.abs().max(1.0) {
                    return Ok(());
                }
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(())
}

/// Fedorov-style exchange: relocate single points to candidate sites when it
/// lowers the objective.
fn exchange(problem: &Problem, x: &mut [f64], value: &mut f64, history: &mut Vec<f64>, norm: f64) -> Result<bool> {
    let d = problem.dims_per_point();
    let cands = problem.candidates();
    let mut any = false;
    for i in 0..x.len() / d {
        let saved: Vec<f64> = x[i * d..(i + 1) * d].to_vec();
        let mut best = (*value, None);
        for (c, cand) in cands.iter().enumerate() {
            x[i * d..(i + 1) * d].copy_from_slice(cand);
            let (f, _) = problem.objective(x, false)?;
            if f < best.0 {
                best = (f, Some(c));
            }
        }
        match best.1 {
            Some(c) => {
                x[i * d..(i + 1) * d].copy_from_slice(&cands[c]);
                *value = best.0;
                history.push(best.0 / norm);
                any = true;
            }
            None => x[i * d..(i + 1) * d].copy_from_slice(&saved),
        }
    }
    Ok(any)
}

/// Outcome of one restart: final energy, coordinates, annealed energy,
/// polishing history and restart index.
type Restart = (f64, Vec<f64>, f64, Vec<f64>, usize);

/// Search for weighted Fekete points of degree `k` on a carrier: annealed
/// projected Langevin, then deterministic polishing and exchange moves.
pub fn fekete_search(
    model: &EnsembleModel,
    carrier: Carrier,
    anneal: Schedule,
    anneal_steps: usize,
    restarts: usize,
    seed: u64,
) -> Result<FeketeResult> {
    if model.k() == 0 {
        return Err(Error::DegenerateDegree);
    }
    match carrier {
        Carrier::Circle { .. } if model.n() != 1 || model.mode() != Mode::Complex => {
            return Err(Error::InvalidInput("the circle carrier lives in one complex variable".into()));
        }
        Carrier::Interval { a, b } if model.n() != 1 || model.mode() != Mode::RealLine || !(b > a) => {
            return Err(Error::InvalidInput("the interval carrier needs a < b on the real line".into()));
        }
        _ => {}
    }
    let (beta0, ratio, beta_max) = match anneal {
        Schedule::Geometric { beta0, ratio, beta_max } => (beta0, ratio, beta_max),
        _ => return Err(Error::InvalidInput("fekete_search anneals with a geometric schedule".into())),
    };
    anneal.validate(f64::INFINITY)?;
    let problem = Problem { model, carrier };
    let norm = (model.particles() * model.k()) as f64;
    let runs: Vec<Result<Option<Restart>>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r as u64);
            let npts = model.particles();
            let mut x: Vec<f64> = (0..npts).flat_map(|_| problem.random_point(&mut rng)).collect();
            let (mut fx, _) = problem.objective(&x, false)?;
            if !fx.is_finite() {
                return Ok(None);
            }
            // Annealed Langevin on k H with displacement capped per step.
            let scale = match carrier {
                Carrier::Circle { .. } => 2.0 * PI,
                Carrier::Interval { a, b } => b - a,
                Carrier::Disc { radius } => 2.0 * radius,
                Carrier::Box { lo, hi } => hi - lo,
            };
            let cap = scale / (4.0 * npts as f64);
            let mut h = cap * cap;
            for t in 0..anneal_steps {
                let beta = (beta0 * ratio.powf(t as f64)).min(beta_max);
                let (_, grad) = problem.objective(&x, true)?;
                let Some(g) = grad else { break };
                let temp = (2.0 * h / beta).sqrt();
                let mut y: Vec<f64> = (0..x.len())
                    .map(|i| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        let mv = (-h * g[i] + temp * z).clamp(-cap, cap);
                        x[i] + mv
                    })
                    .collect();
                problem.project(&mut y);
                let (fy, _) = problem.objective(&y, false)?;
                // Metropolis filter at the current temperature keeps the walk in low energy
                if fy.is_finite() && mh_accept(-beta * (fy - fx), &mut rng) {
                    x = y;
                    fx = fy;
                    h = (h * 1.02).min(cap * cap);
                } else {
                    h *= 0.9;
                }
            }
            let annealed = fx / norm;
            let mut history = vec![fx / norm];
            polish(&problem, &mut x, &mut fx, &mut history, norm)?;
            for _ in 0..20 {
                if !exchange(&problem, &mut x, &mut fx, &mut history, norm)? {
                    break;
                }
                polish(&problem, &mut x, &mut fx, &mut history, norm)?;
            }
            Ok(Some((fx, x, annealed, history, r)))
        })
        .collect();
    let mut best: Option<Restart> = None;
    for run in runs {
        if let Some(c) = run? {
            if best.as_ref().is_none_or(|b| c.0 < b.0) {
                best = Some(c);
            }
        }
    }
    let (fx, x, annealed, history, restart) = best.ok_or_else(|| Error::SearchFailure("every restart started singular".into()))?;
    let config = problem.to_config(&x)?;
    let l = log_abs_det2(model.basis(), &config)?;
    Ok(FeketeResult {
        energy: -l / norm,
        weighted_energy: fx / norm,
        annealed_energy: annealed,
        history,
        restart,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{BaseMeasure, Weight};

    #[test]
    fn csv_layout() {
        let cfg = Configuration::from_complex(&[C64::new(0.5, -1.0), C64::new(2.0, 0.25)]).unwrap();
        let set = SampleSet {
            n: 1,
            mode: Mode::Complex,
            chains: vec![ChainOutput {
                chain: 0,
                sweeps: vec![7],
                configs: vec![cfg],
                acceptance: 0.5,
                step_mala: 0.1,
                step_rwm: 0.1,
                final_hamiltonian: 0.0,
            }],
        };
        assert_eq!(set.to_csv(), "chain,sweep,particle,re_1,im_1\n0,7,0,0.5,-1\n0,7,1,2,0.25\n");
    }

    #[test]
    fn schedules() {
        let g = Schedule::Geometric { beta0: 1.0, ratio: 2.0, beta_max: 10.0 };
        assert_eq!(g.beta_at(0.0, 3, 0), 8.0);
        assert_eq!(g.beta_at(0.0, 4, 0), 10.0);
        let r = Schedule::Ramp { start: 1.0 };
        assert_eq!(r.beta_at(5.0, 5, 10), 3.0);
        assert_eq!(r.beta_at(5.0, 50, 10), 5.0);
        assert!(Schedule::Geometric { beta0: 1.0, ratio: 1.0, beta_max: 2.0 }.validate(1.0).is_err());
    }

    #[test]
    fn single_particle_gaussian() {
        // N = 1, H = |z|^2, beta = 1: a standard complex Gaussian, E|z|^2 = 1.
        let model = EnsembleModel::new(1, 0, Weight::quadratic(), BaseMeasure::lebesgue(), 1.0, Mode::Complex).unwrap();
        let set = run_chain(&model, Schedule::Fixed, 40_000, 4, 3).unwrap();
        let pts = set.pooled_points();
        let m2: f64 = pts.iter().map(|p| p[0].norm_sqr()).sum::<f64>() / pts.len() as f64;
        assert!((m2 - 1.0).abs() < 0.05, "{m2}");
        assert!(set.acceptance() > 0.3);
    }
}
