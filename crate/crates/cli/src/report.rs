use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use fekete_gibbs::diagnostics::{wasserstein1, EmpiricalMeasure, Reference};
use fekete_gibbs::equilibrium::RadialProfile;
use fekete_gibbs::polybasis::Mode;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::artifacts::{sha256_hex, Manifest, RunOutput, Summary, MANIFEST, SUMMARY};
use crate::config::{Command, RunConfig, SCHEMA_VERSION};
use crate::error::{io_err, CliError, CliResult};
use crate::row;

/// Subdirectory of the scanned directory that holds the report itself.
pub const REPORT_DIR: &str = "report";

#[derive(Debug, Clone, Serialize)]
pub struct Exclusion {
    pub run: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
struct RunInfo {
    run: String,
    command: String,
    model_key: Option<String>,
    family: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDoc {
    schema_version: u32,
    runs: Vec<RunInfo>,
    pub exclusions: Vec<Exclusion>,
    pub warnings: usize,
}

struct Run {
    name: String,
    manifest: Manifest,
    config: RunConfig,
    summary: Summary,
}

/// `f64` ordered by `total_cmp`, for use in keys.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// (command, model, label, beta, metric)
type GroupKey = (String, String, String, Option<Key>, String);

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Checks a run directory: a readable manifest, every file hashed, every hash matching.
fn load_run(dir: &Path, name: &str) -> CliResult<Result<Run, String>> {
    let mpath = dir.join(MANIFEST);
    if !mpath.exists() {
        return Ok(Err("missing manifest".into()));
    }
    let text = std::fs::read_to_string(&mpath).map_err(|e| io_err(&mpath, e))?;
    let value: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return Ok(Err(format!("unreadable manifest: {e}"))),
    };
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    if version != Some(SCHEMA_VERSION as u64) {
        return Err(CliError::Config(format!("{name}: manifest schema version {version:?}, expected {SCHEMA_VERSION}")));
    }
    let manifest: Manifest = match serde_json::from_value(value) {
        Ok(m) => m,
        Err(e) => return Ok(Err(format!("unreadable manifest: {e}"))),
    };
    let mut files: Vec<String> = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let file = entry.file_name().to_string_lossy().into_owned();
        if file != MANIFEST {
            files.push(file);
        }
    }
    files.sort();
    for file in &files {
        if !manifest.outputs.iter().any(|o| &o.path == file) {
            return Ok(Err(format!("unhashed input {file}")));
        }
    }
    for o in &manifest.outputs {
        let path = dir.join(&o.path);
        match std::fs::read(&path) {
            Ok(bytes) if sha256_hex(&bytes) == o.sha256 => {}
            Ok(_) => return Ok(Err(format!("hash mismatch for {}", o.path))),
            Err(_) => return Ok(Err(format!("missing output {}", o.path))),
        }
    }
    let config: RunConfig = match serde_json::from_value(manifest.config.clone()) {
        Ok(c) => c,
        Err(e) => return Ok(Err(format!("unreadable config in manifest: {e}"))),
    };
    let spath = dir.join(SUMMARY);
    let summary: Summary = match std::fs::read_to_string(&spath).ok().and_then(|t| serde_json::from_str(&t).ok()) {
        Some(s) => s,
        None => return Ok(Err("missing or unreadable summary".into())),
    };
    Ok(Ok(Run { name: name.to_string(), manifest, config, summary }))
}

fn read_points(path: &Path) -> Option<Vec<C64>> {
    let text = std::fs::read_to_string(path).ok()?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next()?.split(',').collect();
    let re = header.iter().position(|h| *h == "re_1")?;
    let im = header.iter().position(|h| *h == "im_1")?;
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some(C64::new(f.get(re)?.parse().ok()?, f.get(im)?.parse().ok()?))
        })
        .collect()
}

fn read_profile(path: &Path) -> Option<RadialProfile> {
    let text = std::fs::read_to_string(path).ok()?;
    let (mut s, mut psi, mut m) = (Vec::new(), Vec::new(), Vec::new());
    for l in text.lines().skip(1) {
        let f: Vec<f64> = l.split(',').map(|v| v.parse().ok()).collect::<Option<_>>()?;
        if f.len() != 3 {
            return None;
        }
        s.push(f[0]);
        psi.push(f[1]);
        m.push(f[2]);
    }
    Some(RadialProfile::from_parts(s, psi, m))
}

/// The `beta` of the main (unlabelled) summary row.
fn main_beta(run: &Run) -> Option<f64> {
    run.summary.rows.iter().find(|r| !r.contains_key("label")).and_then(|r| r.get("beta")).and_then(|v| v.as_f64())
}

fn one_variable_complex(run: &Run) -> bool {
    run.config.model.as_ref().is_some_and(|m| m.n == 1 && m.mode == Mode::Complex)
}

/// Scan `dir`, verify every run and write the consolidated tables to `dir/report`.
pub fn report(dir: &Path) -> CliResult<ReportDoc> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    let mut names: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name != REPORT_DIR && entry.path().is_dir() {
            names.push(name);
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(CliError::Config(format!("{}: no run directories", dir.display())));
    }
    let mut runs = Vec::new();
    let mut exclusions = Vec::new();
    for name in &names {
        match load_run(&dir.join(name), name)? {
            Ok(run) => runs.push(run),
            Err(reason) => exclusions.push(Exclusion { run: name.clone(), reason }),
        }
    }

    let mut long = String::from("command,model,run,label,beta,metric,value\n");
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for run in &runs {
        let model = run.summary.model_key.clone().unwrap_or_default();
        for r in &run.summary.rows {
            let label = r.get("label").and_then(|v| v.as_str()).unwrap_or("").to_string();
            let beta = r.get("beta").and_then(|v| v.as_f64());
            for (metric, v) in r {
                if metric == "beta" || metric == "label" {
                    continue;
                }
                let value = match v {
                    serde_json::Value::Number(x) => x.as_f64(),
                    serde_json::Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
                    _ => None,
                };
                let Some(value) = value else { continue };
                long.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    run.summary.command, model, run.name, label, opt(beta), metric, value
                ));
                groups
                    .entry((run.summary.command.clone(), model.clone(), label.clone(), beta.map(Key), metric.clone()))
                    .or_default()
                    .push(value);
            }
        }
    }
    let mut comparison = String::from("command,model,label,beta,metric,runs,mean,min,max\n");
    for ((command, model, label, beta, metric), values) in &groups {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        comparison.push_str(&format!(
            "{command},{model},{label},{},{metric},{},{mean},{lo},{hi}\n",
            opt(beta.map(|b| b.0)),
            values.len()
        ));
    }

    // samples against the limiting measure of the same model at the same beta
    let mut joined = String::from("family,beta,sample_run,equilibrium_run,w1\n");
    for s in runs.iter().filter(|r| r.manifest.command == Command::Sample && one_variable_complex(r)) {
        let Some(beta) = main_beta(s) else { continue };
        for e in runs.iter().filter(|r| r.manifest.command == Command::Equilibrium && r.manifest.family == s.manifest.family) {
            if main_beta(e) != Some(beta) || !one_variable_complex(e) {
                continue;
            }
            let (Some(points), Some(profile)) =
                (read_points(&dir.join(&s.name).join("samples.csv")), read_profile(&dir.join(&e.name).join("profile.csv")))
            else {
                continue;
            };
            let w1 = wasserstein1(&EmpiricalMeasure::planar(points), Reference::Radial(&profile))?;
            joined.push_str(&format!(
                "{},{beta},{},{},{w1}\n",
                s.manifest.family.clone().unwrap_or_default(),
                s.name,
                e.name
            ));
        }
    }

    let doc = ReportDoc {
        schema_version: SCHEMA_VERSION,
        runs: runs
            .iter()
            .map(|r| RunInfo {
                run: r.name.clone(),
                command: r.summary.command.clone(),
                model_key: r.summary.model_key.clone(),
                family: r.summary.family.clone(),
            })
            .collect(),
        warnings: exclusions.len(),
        exclusions,
    };
    let cfg = RunConfig {
        schema_version: SCHEMA_VERSION,
        command: Command::Report,
        seed: 0,
        model: None,
        execution: Default::default(),
        output: None,
        params: serde_json::Value::Null,
    };
    let mut out = RunOutput::new(&dir.join(REPORT_DIR), &cfg);
    out.add("long.csv", long);
    out.add("comparison.csv", comparison);
    out.add("joined.csv", joined);
    out.add("report.json", serde_json::to_string_pretty(&doc)? + "\n");
    out.push_row(row! { "runs" => doc.runs.len(), "exclusions" => doc.exclusions.len(), "warnings" => doc.warnings });
    out.finish(&cfg)?;
    Ok(doc)
}
