use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Command, RunConfig, SCHEMA_VERSION};
use crate::error::{io_err, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    #[serde(default)]
    pub model_key: Option<String>,
    #[serde(default)]
    pub family: Option<String>,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputEntry>,
}

/// One line of headline diagnostics; `beta` is the join key when present.
pub type Row = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    #[serde(default)]
    pub model_key: Option<String>,
    #[serde(default)]
    pub family: Option<String>,
    pub rows: Vec<Row>,
}

/// Builds a row from `(name, value)` pairs; non-finite floats become null.
#[macro_export]
macro_rules! row {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut r = $crate::artifacts::Row::new();
        $( r.insert($k.to_string(), serde_json::json!($v)); )*
        r
    }};
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files of one run, written together with their manifest.
pub struct RunOutput {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
    pub summary: Summary,
}

impl RunOutput {
    pub fn new(dir: &Path, cfg: &RunConfig) -> Self {
        let summary = Summary {
            command: cfg.command.name().to_string(),
            model_key: cfg.model.as_ref().map(|m| m.key()),
            family: cfg.model.as_ref().map(|m| m.family()),
            rows: Vec::new(),
        };
        RunOutput { dir: dir.to_path_buf(), files: Vec::new(), summary }
    }

    pub fn add(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text.into_bytes()));
    }

    pub fn push_row(&mut self, row: Row) {
        self.summary.rows.push(row);
    }

    pub fn finish(mut self, cfg: &RunConfig) -> CliResult<Manifest> {
        let summary = serde_json::to_string_pretty(&self.summary)? + "\n";
        self.add(SUMMARY, summary);
        std::fs::create_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let mut outputs = Vec::new();
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
            outputs.push(OutputEntry { path: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        }
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: cfg.command,
            seed: cfg.seed,
            model_key: self.summary.model_key.clone(),
            family: self.summary.family.clone(),
            config: serde_json::to_value(cfg)?,
            outputs,
        };
        let path = self.dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(manifest)
    }
}
