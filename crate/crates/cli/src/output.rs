use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{CliError, Result};

/// Collects output files for one run; all writes go through here, in call order.
pub struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(CliError::io(dir.display().to_string()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(CliError::io(path.display().to_string()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<V: Serialize>(&mut self, name: &str, value: &V) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(CliError::io(path.display().to_string()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, command: &str, cfg: &Config) -> Result<()> {
        let text = cfg.to_toml();
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            scenario: cfg.scenario.name(),
            seed: cfg.seed,
            git_describe: git_describe(),
            config_sha256: config_hash(&text),
            outputs: std::mem::take(&mut self.files),
            config: text,
        };
        self.json("manifest.json", &manifest)
    }
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    scenario: &'static str,
    seed: u64,
    git_describe: String,
    config_sha256: String,
    outputs: Vec<String>,
    /// The resolved configuration; rerunning with it reproduces every output.
    config: String,
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}
