//! Run manifests: the command line, seeds and content hashes of every input
//! and output, written beside the outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name.
    pub args: Vec<String>,
    pub cwd: PathBuf,
    pub seed: Option<u64>,
    pub threads: usize,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    /// Command-specific details.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| CliError::file(path, e))?))
}

/// Records the files a command reads and writes.
pub struct Run {
    manifest: Manifest,
}

impl Run {
    pub fn new(command: &str, args: &[String]) -> Self {
        Self {
            manifest: Manifest {
                tool: "prt".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                args: args.to_vec(),
                cwd: std::env::current_dir().unwrap_or_default(),
                seed: None,
                threads: prt_core::parallel::worker_count(None),
                inputs: Vec::new(),
                outputs: Vec::new(),
                details: serde_json::Value::Null,
            },
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn details(&mut self, v: serde_json::Value) {
        self.manifest.details = v;
    }

    /// Reads an input file and records its hash.
    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| CliError::file(path, e))?;
        self.manifest.inputs.push(FileRecord { path: path.to_path_buf(), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    /// Records an input read elsewhere.
    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let sha256 = hash_file(path)?;
        self.manifest.inputs.push(FileRecord { path: path.to_path_buf(), sha256 });
        Ok(())
    }

    /// Writes an output file, creating parent directories, and records its hash.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| CliError::file(parent, e))?;
        }
        std::fs::write(path, bytes).map_err(|e| CliError::file(path, e))?;
        self.manifest.outputs.push(FileRecord { path: path.to_path_buf(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn finish(self, manifest_path: &Path) -> CliResult<Manifest> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(manifest_path, text).map_err(|e| CliError::file(manifest_path, e))?;
        Ok(self.manifest)
    }
}

/// `<out>.manifest.json`.
pub fn beside(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn load(path: &Path) -> CliResult<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: not a run manifest: {e}", path.display())))
}

/// Output paths whose current content differs from the recorded hash.
pub fn mismatches(m: &Manifest) -> Vec<PathBuf> {
    m.outputs
        .iter()
        .filter(|r| {
            let p = if r.path.is_absolute() { r.path.clone() } else { m.cwd.join(&r.path) };
            hash_file(&p).map(|h| h != r.sha256).unwrap_or(true)
        })
        .map(|r| r.path.clone())
        .collect()
}
