use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Provenance for one subcommand run. A copy is written next to every
/// artifact the run produced.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub config: Value,
    pub config_sources: BTreeMap<String, String>,
    /// sha256 of each input file's bytes.
    pub inputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub outputs: Vec<String>,
    /// Counts and scores the run reported.
    pub summary: Value,
    pub duration_secs: f64,
}

pub struct Recorder {
    started: Instant,
    manifest: RunManifest,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

pub fn sidecar(artifact: &Path, suffix: &str) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

impl Recorder {
    pub fn new(subcommand: &str) -> Self {
        Recorder {
            started: Instant::now(),
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                config: Value::Null,
                config_sources: BTreeMap::new(),
                inputs: BTreeMap::new(),
                seeds: BTreeMap::new(),
                outputs: Vec::new(),
                summary: Value::Null,
                duration_secs: 0.0,
            },
        }
    }

    pub fn config(&mut self, config: Value, sources: BTreeMap<String, String>) {
        self.manifest.config = config;
        self.manifest.config_sources = sources;
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let digest = sha256_file(path)?;
        self.manifest.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.manifest.seeds.insert(name.to_string(), seed);
    }

    pub fn summary(&mut self, v: Value) {
        self.manifest.summary = v;
    }

    pub fn output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    /// Writes `<artifact>.manifest.json` for every recorded output.
    pub fn finish(mut self) -> Result<RunManifest, CliError> {
        self.manifest.duration_secs = self.started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::data(e.to_string()))?;
        for out in &self.manifest.outputs {
            let path = sidecar(Path::new(out), ".manifest.json");
            std::fs::write(&path, &text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        }
        Ok(self.manifest)
    }
}
