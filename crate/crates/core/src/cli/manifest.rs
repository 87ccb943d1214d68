use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub version: String,
    pub started_at: DateTime<Utc>,
    pub wall_clock_secs: f64,
    pub git_describe: Option<String>,
}

/// Collects paths while a command runs and writes the manifest at the end.
pub struct ManifestBuilder {
    manifest: RunManifest,
    start: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                command: command.to_string(),
                config: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
                seed: None,
                version: env!("CARGO_PKG_VERSION").to_string(),
                started_at: Utc::now(),
                wall_clock_secs: 0.0,
                git_describe: None,
            },
            start: Instant::now(),
        }
    }

    pub fn config(&mut self, path: Option<&Path>) -> &mut Self {
        self.manifest.config = path.map(Path::to_path_buf);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.manifest.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.manifest.outputs.push(path.to_path_buf());
        self
    }

    pub fn seed(&mut self, seed: Option<u64>) -> &mut Self {
        self.manifest.seed = seed;
        self
    }

    /// Writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<RunManifest> {
        self.manifest.wall_clock_secs = self.start.elapsed().as_secs_f64();
        self.manifest.git_describe = git_describe();
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&path, json + "\n").map_err(|source| Error::File { path, source })?;
        Ok(self.manifest)
    }
}

fn git_describe() -> Option<String> {
    let out = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()?;
    out.status.success().then(|| String::from_utf8_lossy(&out.stdout).trim().to_string()).filter(|s| !s.is_empty())
}
