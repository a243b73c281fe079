use std::path::{Path, PathBuf};

use fekete_gibbs::polybasis::Mode;
use fekete_gibbs::sampler::Schedule;
use fekete_gibbs::weights::{BaseMeasure, Weight};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sample,
    Fekete,
    Equilibrium,
    Bergman,
    Tropical,
    Transport,
    CurieWeiss,
    GreenFormula,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Fekete => "fekete",
            Command::Equilibrium => "equilibrium",
            Command::Bergman => "bergman",
            Command::Tropical => "tropical",
            Command::Transport => "transport",
            Command::CurieWeiss => "curie-weiss",
            Command::GreenFormula => "green-formula",
            Command::Report => "report",
        }
    }
}

/// A run, fully determined by this document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub command: Command,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: serde_json::Value,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub weight: Weight,
    #[serde(default = "BaseMeasure::lebesgue")]
    pub base: BaseMeasure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "complex")]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
}

fn one() -> usize {
    1
}

fn complex() -> Mode {
    Mode::Complex
}

impl ModelBlock {
    pub fn k(&self) -> CliResult<usize> {
        self.k.ok_or_else(|| CliError::Config("model.k is required for this command".into()))
    }

    pub fn beta(&self) -> CliResult<f64> {
        self.beta.ok_or_else(|| CliError::Config("model.beta is required for this command".into()))
    }

    /// Key used by `report` to join runs: everything but `beta` and the schedule.
    pub fn key(&self) -> String {
        short_hash(&serde_json::json!({
            "n": self.n, "k": self.k, "weight": self.weight, "base": self.base, "mode": self.mode,
        }))
    }

    /// Like `key` but also blind to the degree, so that samples and
    /// limiting solutions of the same model meet.
    pub fn family(&self) -> String {
        short_hash(&serde_json::json!({
            "n": self.n, "weight": self.weight, "base": self.base, "mode": self.mode,
        }))
    }
}

fn short_hash(v: &serde_json::Value) -> String {
    // serde_json maps are ordered, so this is canonical
    let text = serde_json::to_string(v).expect("model serializes");
    hex::encode(&Sha256::digest(text.as_bytes())[..6])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Execution {
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "one")]
    pub chains: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_sweeps() -> usize {
    1000
}

impl Default for Execution {
    fn default() -> Self {
        Execution { sweeps: default_sweeps(), chains: 1, workers: None }
    }
}

/// Evenly spaced real grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl GridSpec {
    pub fn points(&self) -> CliResult<Vec<f64>> {
        if self.nodes < 2 || !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(CliError::Config(format!("bad grid {self:?}")));
        }
        let h = (self.hi - self.lo) / (self.nodes - 1) as f64;
        Ok((0..self.nodes).map(|i| self.lo + i as f64 * h).collect())
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema version {} (this tool reads {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn model(&self) -> CliResult<&ModelBlock> {
        self.model.as_ref().ok_or_else(|| CliError::Config(format!("{} needs a model block", self.command.name())))
    }

    /// Command parameters; a missing block reads as `{}`.
    pub fn params<T: DeserializeOwned>(&self) -> CliResult<T> {
        let v = if self.params.is_null() { serde_json::json!({}) } else { self.params.clone() };
        serde_json::from_value(v).map_err(|e| CliError::Config(format!("params: {e}")))
    }
}
