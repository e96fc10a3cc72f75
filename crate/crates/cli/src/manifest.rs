use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use edgehinf_core::format::round_json;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one invocation. Written next to the artifacts; the only
/// file that carries timestamps.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub seeds: BTreeMap<String, u64>,
    pub tool_version: String,
    pub started_unix: u64,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

/// Tracks inputs and outputs of a run and writes its artifacts.
pub struct Run {
    command: String,
    out_dir: Option<PathBuf>,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    seeds: BTreeMap<String, u64>,
    details: BTreeMap<String, Value>,
    started: Instant,
    started_unix: u64,
}

impl Run {
    pub fn new(command: &str, out_dir: Option<PathBuf>) -> Result<Self> {
        if let Some(dir) = &out_dir {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        Ok(Self {
            command: command.into(),
            out_dir,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seeds: BTreeMap::new(),
            details: BTreeMap::new(),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        })
    }

    pub fn read(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(text.as_bytes())) });
        Ok(text)
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.into(), seed);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        round_json(&mut v);
        self.details.insert(key.into(), v);
        Ok(())
    }

    pub fn has_out_dir(&self) -> bool {
        self.out_dir.is_some()
    }

    /// Writes `content` to `name` in the output directory (if any) and,
    /// with `echo`, to stdout.
    pub fn emit(&mut self, name: &str, content: &str, echo: bool) -> Result<()> {
        if echo {
            print!("{content}");
        }
        if let Some(dir) = &self.out_dir {
            let path = dir.join(name);
            fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
            self.outputs.push(name.into());
        }
        Ok(())
    }

    /// Writes an artifact to an explicit path, outside the output directory.
    pub fn emit_to(&mut self, path: &Path, content: &str) -> Result<()> {
        fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let Some(dir) = self.out_dir.clone() else {
            return Ok(());
        };
        let manifest = RunManifest {
            command: self.command,
            argv: std::env::args().collect(),
            inputs: self.inputs,
            seeds: self.seeds,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            started_unix: self.started_unix,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
            details: self.details,
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

/// Pretty JSON with floats rounded to 12 significant digits.
pub fn to_json(value: &impl Serialize) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}
