use std::path::{Path, PathBuf};

use fekete_gibbs::bergman::{bergman_density, bernstein_markov_diag, dpp_samples, profile_to_csv, GramFactorization, MeasureSpec};
use fekete_gibbs::curieweiss::{cw_finite_n, phase_table, phase_table_csv, Coupling, CwParams, Stability};
use fekete_gibbs::diagnostics::{wasserstein1, EmpiricalMeasure, Reference};
use fekete_gibbs::energy::{green_formula_estimate, EnsembleModel};
use fekete_gibbs::equilibrium::{default_grid, preset_equilibrium, solve_cy_radial, solve_mfe_radial_with_stats, sweep_to_csv, temperature_sweep, RadialProfile};
use fekete_gibbs::polybasis::{Configuration, Mode};
use fekete_gibbs::sampler::{fekete_search, run_chain, Carrier, ChainOutput, SampleSet, Schedule};
use fekete_gibbs::transport::{monotone_map_1d, ot_cost, ot_cost_with, DiscreteMeasure, Law1d, OtSolver};
use fekete_gibbs::tropical::{divergence_diagnostic, ma_grid, r_invariant, solve_real_ma_1d, tropical_gibbs, BodySpec, ConvexBody};
use fekete_gibbs::weights::admissibility_check;
use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::artifacts::RunOutput;
use crate::config::{Command, GridSpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::row;

/// Where a run's inputs are resolved from and its outputs written to.
pub struct Context {
    pub config_dir: PathBuf,
    pub out: PathBuf,
}

pub fn run(cfg: &RunConfig, ctx: &Context) -> CliResult<()> {
    let mut out = RunOutput::new(&ctx.out, cfg);
    match cfg.command {
        Command::Sample => sample(cfg, &mut out)?,
        Command::Fekete => fekete(cfg, &mut out)?,
        Command::Equilibrium => equilibrium(cfg, &mut out)?,
        Command::Bergman => bergman(cfg, &mut out)?,
        Command::Tropical => tropical(cfg, ctx, &mut out)?,
        Command::Transport => transport(cfg, &mut out)?,
        Command::CurieWeiss => curie_weiss(cfg, &mut out)?,
        Command::GreenFormula => green(cfg, &mut out)?,
        Command::Report => unreachable!("report has its own entry point"),
    }
    out.finish(cfg)?;
    Ok(())
}

fn single_set(n: usize, mode: Mode, configs: Vec<Configuration>) -> SampleSet {
    let sweeps = (0..configs.len()).collect();
    SampleSet {
        n,
        mode,
        chains: vec![ChainOutput {
            chain: 0,
            sweeps,
            configs,
            acceptance: 1.0,
            step_mala: 0.0,
            step_rwm: 0.0,
            final_hamiltonian: 0.0,
        }],
    }
}

fn w1_to_preset(points: &[Vec<C64>], mode: Mode, name: &str) -> CliResult<f64> {
    let law = preset_equilibrium(name)?;
    let emp = EmpiricalMeasure::from_points(points, mode)?;
    Ok(wasserstein1(&emp, Reference::ClosedForm(&law))?)
}

fn second_moment(points: &[Vec<C64>]) -> f64 {
    points.iter().map(|p| p.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() / points.len().max(1) as f64
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleParams {
    #[serde(default)]
    reference: Option<String>,
}

fn sample(cfg: &RunConfig, out: &mut RunOutput) -> CliResult<()> {
    let m = cfg.model()?;
    let p: SampleParams = cfg.params()?;
    let (beta, k) = (m.beta()?, m.k()?);
    let schedule = m.schedule.unwrap_or(Schedule::Fixed);
    let model = EnsembleModel::new(m.n, k, m.weight.clone(), m.base.clone(), beta, m.mode)?;
    let min_beta = match schedule {
        Schedule::Fixed => beta,
        Schedule::Ramp { start } => start.min(beta),
        Schedule::Geometric { beta0, .. } => beta0,
    };
    if min_beta > 0.0 {
        let verdict = admissibility_check(&m.weight, &m.base, min_beta, m.n)?;
        if !verdict.is_ok() {
            return Err(CliError::Admissibility(format!("{verdict:?} at beta = {min_beta}")));
        }
    }
    let set = run_chain(&model, schedule, cfg.execution.sweeps, cfg.execution.chains, cfg.seed)?;
    let pooled = set.pooled_points();
    let mut r = row! {
        "beta" => beta,
        "k" => k,
        "acceptance" => set.acceptance(),
        "draws" => set.chains.iter().map(|c| c.configs.len()).sum::<usize>(),
        "second_moment" => second_moment(&pooled),
    };
    if let Some(name) = &p.reference {
        r.insert("w1_reference".into(), serde_json::json!(w1_to_preset(&pooled, m.mode, name)?));
    }
    out.add("samples.csv", set.to_csv());
    out.push_row(r);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeketeParams {
    carrier: Carrier,
    #[serde(default = "default_anneal")]
    anneal: Schedule,
    #[serde(default = "default_anneal_steps")]
    anneal_steps: usize,
    #[serde(default = "default_restarts")]
    restarts: usize,
    #[serde(default)]
    reference: Option<String>,
}

fn default_anneal() -> Schedule {
    Schedule::Geometric { beta0: 1.0, ratio: 1.01, beta_max: 1e4 }
}

fn default_anneal_steps() -> usize {
    2000
}

fn default_restarts() -> usize {
    3
}

fn fekete(cfg: &RunConfig, out: &mut RunOutput) -> CliResult<()> {
    let m = cfg.model()?;
    let p: FeketeParams = cfg.params()?;
    let k = m.k()?;
    let model = EnsembleModel::zero_temperature(m.n, k, m.weight.clone(), m.base.clone(), m.mode)?;
    let res = fekete_search(&model, p.carrier, p.anneal, p.anneal_steps, p.restarts, cfg.seed)?;
    let points: Vec<Vec<C64>> = res.config.points().map(|z| z.to_vec()).collect();
    let mut r = row! {
        "k" => k,
        "energy" => res.energy,
        "weighted_energy" => res.weighted_energy,
        "annealed_energy" => res.annealed_energy,
        "restart" => res.restart,
    };
    if let Some(name) = &p.reference {
        r.insert("w1_reference".into(), serde_json::json!(w1_to_preset(&points, m.mode, name)?));
    }
    out.add("samples.csv", single_set(m.n, m.mode, vec![res.config]).to_csv());
    out.push_row(r);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EquilibriumParams {
    #[serde(default)]
    grid: Option<GridSpec>,
    #[serde(default)]
    betas: Option<Vec<f64>>,
}

fn radial_second_moment(p: &RadialProfile) -> f64 {
    let total = p.total_mass();
    p.cell_masses().iter().zip(p.s()).map(|(w, s)| w * s.exp()).sum::<f64>() / total
}

fn equilibrium(cfg: &RunConfig, out: &mut RunOutput) -> CliResult<()> {
    let m = cfg.model()?;
    let p: EquilibriumParams = cfg.params()?;
    let grid = match p.grid {
        Some(g) => g.points()?,
        None => default_grid(),
    };
    if m.beta.is_none() && p.betas.is_none() {
        return Err(CliError::Config("equilibrium needs model.beta or params.betas".into()));
    }
    if let Some(beta) = m.beta {
        let (profile, residual) = if beta == 0.0 {
            (solve_cy_radial(&m.base, &m.weight, &grid)?, None)
        } else {
            let (profile, stats) = solve_mfe_radial_with_stats(&m.weight, &m.base, beta, &grid)?;
            (profile, Some(stats.residual))
        };
        out.add("profile.csv", profile.to_csv());
        out.push_row(row! {
            "beta" => beta,
            "residual" => residual,
            "total_mass" => profile.total_mass(),
            "support_radius" => profile.radius_at_mass(0.999),
            "radial_second_moment" => radial_second_moment(&profile),
        });
    }
    if let Some(betas) = &p.betas {
        let rows = temperature_sweep(&m.weight, &m.base, betas, &grid);
        out.add("sweep.csv", sweep_to_csv(&rows));
        for r in rows {
            out.push_row(row! {
                "beta" => r.beta,
                "label" => "sweep",
                "gap_envelope" => r.gap_envelope,
                "gap_cy" => r.gap_cy,
                "residual" => r.residual,
                "support_radius" => r.support_radius,
            });
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BergmanParams {
    measure: MeasureSpec,
    grid: GridSpec,
    #[serde(default)]
    dpp_samples: usize,
    #[serde(default)]
    bm_degrees: Vec<usize>,
}

/// Real grid points, padded with zeros in the remaining coordinates.
fn grid_points(grid: &GridSpec, n: usize) -> CliResult<Vec<Vec<C64>>> {
    Ok(grid
        .points()?
        .into_iter()
        .map(|x| {
            let mut z = vec![C64::new(0.0, 0.0); n];
            z[0] = C64::new(x, 0.0);
            z
        })
        .collect())
}

fn bergman(cfg: &RunConfig, out: &mut RunOutput) -> CliResult<()> {
    let m = cfg.model()?;
    let p: BergmanParams = cfg.params()?;
    let k = m.k()?;
    let gram = GramFactorization::new(m.n, k, m.weight.clone(), p.measure.clone())?;
    let grid = grid_points(&p.grid, m.n)?;
    let density = bergman_density(&gram, &grid);
    let trace = gram.integrate(|z| gram.kernel_diagonal(z));
    out.add("table.csv", profile_to_csv(&grid, &density));
    let mut r = row! {
        "k" => k,
        "size" => gram.size(),
        "condition" => gram.condition,
        "gram_residual" => gram.residual,
        "trace" => trace,
        "sup_density" => density.iter().copied().fold(0.0, f64::max),
    };
    if p.dpp_samples > 0 {
        let samples = dpp_samples(&gram, p.dpp_samples, cfg.seed)?;
        let set = single_set(m.n, gram.mode(), samples);
        r.insert("dpp_second_moment".into(), serde_json::json!(second_moment(&set.pooled_points())));
        out.add("samples.csv", set.to_csv());
    }
    if !p.bm_degrees.is_empty() {
        let (rows, ok) = bernstein_markov_diag(&m.weight, &p.measure, &grid, &p.bm_degrees)?;
        let mut csv = String::from("point,value\n");
        for b in &rows {
            csv.push_str(&format!("{},{}\n", b.k, b.sup_rho));
        }
        out.add("bernstein_markov.csv", csv);
        r.insert("bm_exponent".into(), serde_json::json!(rows.last().map(|b| b.exponent)));
        r.insert("bm_ok".into(), serde_json::json!(ok));
    }
    out.push_row(r);
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BodySource {
    Inline(BodySpec),
    File(PathBuf),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaParams {
    beta: f64,
    #[serde(default)]
    shift: f64,
    #[serde(default = "default_half_width")]
    half_width: f64,
    #[serde(default = "default_ma_nodes")]
    nodes: usize,
}

fn default_half_width() -> f64 {
    30.0
}

fn default_ma_nodes() -> usize {
    2001
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DivergenceParams {
    radii: Vec<f64>,
    #[serde(default)]
    sweeps: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TropicalParams {
    body: BodySource,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    beta: Option<f64>,
    #[serde(default)]
    ma: Option<MaParams>,
    #[serde(default)]
    divergence: Option<DivergenceParams>,
}

fn tropical(cfg: &RunConfig, ctx: &Context, out: &mut RunOutput) -> CliResult<()> {
    let p: TropicalParams = cfg.params()?;
    let body = match &p.body {
        BodySource::Inline(spec) => ConvexBody::new(spec.n, spec.vertices.clone())?,
        BodySource::File(path) => ConvexBody::load(&resolve(&ctx.config_dir, path))?,
    };
    let r_p = r_invariant(&body)?;
    let mut head = row! {
        "label" => "body",
        "r_p" => r_p,
        "critical_beta" => -r_p,
        "volume" => body.volume(),
        "barycenter" => body.barycenter(),
    };
    let needs_k = || p.k.ok_or_else(|| CliError::Config("params.k is required".into()));
    let needs_beta = || p.beta.ok_or_else(|| CliError::Config("params.beta is required".into()));
    if p.divergence.is_none() && (p.k.is_some() || p.beta.is_some()) {
        // checked up front so that nothing is written for a divergent ensemble
        let beta = needs_beta()?;
        if !(beta > -r_p) {
            return Err(CliError::Admissibility(format!("beta = {beta} is at or below -R_P = {}", -r_p)));
        }
        let set = tropical_gibbs(&body, needs_k()?, beta, cfg.execution.sweeps, cfg.execution.chains, cfg.seed)?;
        let pooled = set.pooled_points();
        head.insert("beta".into(), serde_json::json!(beta));
        head.insert("acceptance".into(), serde_json::json!(set.acceptance()));
        head.insert("second_moment".into(), serde_json::json!(second_moment(&pooled)));
        out.add("samples.csv", set.to_csv());
    }
    if let Some(d) = &p.divergence {
        let (k, beta) = (needs_k()?, needs_beta()?);
        let rep = divergence_diagnostic(&body, k, beta, &d.radii, d.sweeps.unwrap_or(cfg.execution.sweeps), cfg.seed)?;
        let mut csv = String::from("point,value\n");
        for (w, ratio) in rep.radii.windows(2).zip(&rep.ratios) {
            csv.push_str(&format!("{},{}\n", w[1], ratio));
        }
        out.add("divergence.csv", csv);
        head.insert("beta".into(), serde_json::json!(beta));
        head.insert("ratios".into(), serde_json::json!(rep.ratios));
        head.insert("stable".into(), serde_json::json!(rep.stable));
        head.insert("divergent".into(), serde_json::json!(rep.divergent));
    }
    out.push_row(head);
    if let Some(ma) = &p.ma {
        let (a, b) = body.endpoints()?;
        let sol = solve_real_ma_1d(a, b, ma.beta, ma.shift, &ma_grid(ma.half_width, ma.nodes))?;
        out.add("ma.csv", sol.to_csv());
        out.push_row(row! {
            "beta" => ma.beta,
            "label" => "real-ma",
            "residual" => sol.residual,
            "constant" => sol.constant,
        });
    }
    Ok(())
}

fn resolve(dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        dir.join(path)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureInput {
    points: Vec<Vec<f64>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

impl MeasureInput {
    fn build(&self) -> CliResult<DiscreteMeasure> {
        Ok(match &self.weights {
            Some(w) => DiscreteMeasure::new(self.points.clone(), w.clone())?,
            None => DiscreteMeasure::uniform(self.points.clone())?,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MonotoneParams {
    law: Law1d,
    a: f64,
    b: f64,
    grid: GridSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransportParams {
    #[serde(default)]
    source: Option<MeasureInput>,
    #[serde(default)]
    target: Option<MeasureInput>,
    #[serde(default)]
    solver: Option<OtSolver>,
    #[serde(default)]
    monotone: Option<MonotoneParams>,
}

fn transport(cfg: &RunConfig, out: &mut RunOutput) -> CliResult<()> {
    let p: TransportParams = cfg.params()?;
    match (&p.source, &p.target) {
        (Some(s), Some(t)) => {
            let (mu0, mu1) = (s.build()?, t.build()?);
            let (cost, plan) = match p.solver {
                Some(solver) => ot_cost_with(&mu0, &mu1, solver)?,
                None => ot_cost(&mu0, &mu1)?,
            };
            out.add("plan.csv", plan.to_csv());
            out.push_row(row! { "label" => "plan", "cost" => cost, "support" => plan.entries.len() });
        }
        (None, None) => {}
        _ => return Err(CliError::Config("source and target go together".into())),
    }
    if let Some(mm) = p.monotone {
        let map = monotone_map_1d(mm.law, mm.a, mm.b)?;
        let xs = mm.grid.points()?;
        let mut csv = String::from("point,value\n");
        for &x in &xs {
            csv.push_str(&format!("{},{}\n", x, map.eval(x)));
        }
        out.add("table.csv", csv);
        let u = map.potential(&xs);
        out.push_row(row! { "label" => "monotone", "a" => map.a, "b" => map.b, "potential_range" => u[u.len() - 1] - u[0] });
    }
    if p.source.is_none() && out.summary.rows.is_empty() {
        return Err(CliError::Config("transport needs source/target or monotone".into()));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FiniteParams {
    n: usize,
    beta: f64,
    #[serde(default)]
    h: f64,
    window: (f64, f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurieWeissParams {
    #[serde(default = "ferro")]
    coupling: Coupling,
    #[serde(default)]
    betas: Vec<f64>,
    #[serde(default = "zero_field")]
    hs: Vec<f64>,
    #[serde(default)]
    finite: Option<FiniteParams>,
}

fn ferro() -> Coupling {
    Coupling::Ferro
}

fn zero_field() -> Vec<f64> {
    vec![0.0]
}

fn curie_weiss(cfg: &RunConfig, out: &mut RunOutput) -> CliResult<()> {
    let p: CurieWeissParams = cfg.params()?;
    if p.betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(CliError::Config("betas must be finite and positive".into()));
    }
    if !p.betas.is_empty() {
        let rows = phase_table(&p.betas, &p.hs, p.coupling);
        out.add("phase.csv", phase_table_csv(&rows));
        for r in &rows {
            let minima: Vec<_> = r.fixed_points.iter().filter(|f| f.stability == Stability::Minimum).collect();
            let best = minima.iter().map(|f| f.m).fold(f64::NEG_INFINITY, f64::max);
            let f_min = r.fixed_points.iter().map(|f| f.free_energy).fold(f64::INFINITY, f64::min);
            out.push_row(row! {
                "beta" => r.beta,
                "label" => format!("h={}", r.h),
                "m_max" => best,
                "f_min" => f_min,
                "minima" => minima.len(),
            });
        }
    }
    if let Some(f) = &p.finite {
        let law = cw_finite_n(CwParams { beta: f.beta, h: f.h, n: f.n, coupling: p.coupling }, f.window)?;
        let mut csv = String::from("point,value\n");
        for (m, q) in law.m.iter().zip(&law.prob) {
            csv.push_str(&format!("{m},{q}\n"));
        }
        out.add("law.csv", csv);
        out.push_row(row! {
            "beta" => f.beta,
            "label" => format!("finite n={} h={}", f.n, f.h),
            "rate" => law.rate,
            "gap" => law.gap,
            "log_partition" => law.log_partition,
            "mean_energy" => law.mean_energy,
        });
    }
    if out.summary.rows.is_empty() {
        return Err(CliError::Config("curie-weiss needs betas or finite".into()));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GreenParams {
    grid: GridSpec,
    samples: usize,
}

fn green(cfg: &RunConfig, out: &mut RunOutput) -> CliResult<()> {
    let m = cfg.model()?;
    let p: GreenParams = cfg.params()?;
    let k = m.k()?;
    let model = EnsembleModel::zero_temperature(m.n, k, m.weight.clone(), m.base.clone(), m.mode)?;
    let grid = grid_points(&p.grid, m.n)?;
    let est = green_formula_estimate(&model, &grid, p.samples, cfg.seed)?;
    out.add("table.csv", profile_to_csv(&grid, &est.values));
    out.push_row(row! {
        "k" => k,
        "samples" => est.samples,
        "max_std_error" => est.std_errors.iter().copied().fold(0.0, f64::max),
    });
    Ok(())
}
