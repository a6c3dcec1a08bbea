//! Input digests, staged atomic outputs and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

fn digest(path: &Path, bytes: &[u8]) -> FileDigest {
    FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

/// Written next to the outputs of every command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    pub timestamp: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub warning_count: usize,
    pub warnings: Vec<String>,
}

/// `SOURCE_DATE_EPOCH` pins the manifest timestamp for reproducible runs.
fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0));
    pinned
        .unwrap_or_else(Utc::now)
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Tracks what a command read and holds what it will write. Nothing touches
/// the filesystem until [`Run::commit`], so a failure part-way leaves no
/// outputs behind.
pub struct Run {
    command: String,
    seed: u64,
    threads: Option<usize>,
    config: serde_json::Value,
    inputs: Vec<FileDigest>,
    staged: Vec<(PathBuf, Vec<u8>)>,
    warnings: Vec<String>,
}

impl Run {
    pub fn new(command: &str, seed: u64, threads: Option<usize>) -> Self {
        Self {
            command: command.into(),
            seed,
            threads,
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            staged: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push(digest(path, &bytes));
        Ok(bytes)
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = self.read(path)?;
        serde_json::from_slice(&bytes).with_context(|| format!("cannot parse {}", path.display()))
    }

    pub fn set_config<T: Serialize>(&mut self, config: &T) {
        self.config = serde_json::to_value(config).expect("config serializes");
    }

    /// Records a warning and echoes it to stderr.
    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn stage(&mut self, path: &Path, bytes: Vec<u8>) {
        self.staged.push((path.to_path_buf(), bytes));
    }

    pub fn stage_json<T: Serialize>(&mut self, path: &Path, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
        bytes.push(b'\n');
        self.stage(path, bytes);
    }

    /// Writes every staged file plus the manifest at `manifest_path`. Each
    /// file goes to a temporary sibling first and is renamed into place once
    /// all of them have been written.
    pub fn commit(mut self, manifest_path: &Path) -> Result<()> {
        let outputs = self.staged.iter().map(|(p, b)| digest(p, b)).collect();
        let manifest = RunManifest {
            command: self.command.clone(),
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: timestamp(),
            seed: self.seed,
            threads: self.threads,
            config: self.config.clone(),
            inputs: self.inputs.clone(),
            outputs,
            warning_count: self.warnings.len(),
            warnings: self.warnings.clone(),
        };
        self.stage_json(manifest_path, &manifest);

        let mut temps: Vec<(PathBuf, &Path)> = Vec::new();
        let result = (|| -> Result<()> {
            for (path, bytes) in &self.staged {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
                }
                let name = path
                    .file_name()
                    .with_context(|| format!("{} is not a file path", path.display()))?;
                let tmp =
                    path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
                fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
                temps.push((tmp, path));
            }
            for (tmp, path) in &temps {
                fs::rename(tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
            }
            Ok(())
        })();
        if result.is_err() {
            for (tmp, _) in &temps {
                let _ = fs::remove_file(tmp);
            }
        }
        result
    }
}

/// `<path>.manifest.json`.
pub fn manifest_for(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}
