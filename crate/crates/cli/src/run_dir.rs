use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use spme_core::io::{sha256_hex, to_json_bytes};

use crate::error::CliError;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

/// Written before any data file and rewritten when the run ends; a manifest
/// still marked `running` identifies an interrupted run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub subcommand: String,
    pub tool_version: String,
    pub master_seed: u64,
    pub config: Value,
    pub config_digest: String,
    pub started: String,
    pub finished: Option<String>,
    pub status: RunStatus,
    pub error: Option<String>,
    pub files: Vec<FileDigest>,
}

pub struct RunDir {
    path: PathBuf,
    manifest: RunManifest,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunDir {
    /// Creates `<root>/<timestamp>-<digest>/` and writes the initial manifest.
    pub fn create(root: &Path, subcommand: &str, seed: u64, config: Value) -> Result<Self, CliError> {
        let config_digest = sha256_hex(&serde_json::to_vec(&(subcommand, &config))?);
        let stamp = Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
        fs::create_dir_all(root)?;
        let base = format!("{stamp}-{}", &config_digest[..12]);
        let mut path = root.join(&base);
        let mut k = 1;
        while let Err(e) = fs::create_dir(&path) {
            if e.kind() != std::io::ErrorKind::AlreadyExists {
                return Err(e.into());
            }
            path = root.join(format!("{base}-{k}"));
            k += 1;
        }
        let dir = Self {
            path,
            manifest: RunManifest {
                manifest_version: MANIFEST_VERSION,
                subcommand: subcommand.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                master_seed: seed,
                config,
                config_digest,
                started: now(),
                finished: None,
                status: RunStatus::Running,
                error: None,
                files: Vec::new(),
            },
        };
        dir.write_manifest()?;
        Ok(dir)
    }

    #[cfg(test)]
    pub fn path(&self) -> &Path {
        &self.path
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let tmp = self.path.join("manifest.json.tmp");
        fs::write(&tmp, to_json_bytes(&self.manifest)?)?;
        fs::rename(tmp, self.path.join("manifest.json"))?;
        Ok(())
    }

    /// Writes one data file and records its digest.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let mut f = fs::File::create(self.path.join(name))?;
        f.write_all(bytes)?;
        f.sync_all()?;
        self.manifest.files.push(FileDigest {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn finish(mut self, outcome: &Result<(), CliError>) -> Result<PathBuf, CliError> {
        self.manifest.finished = Some(now());
        match outcome {
            Ok(()) => self.manifest.status = RunStatus::Complete,
            Err(e) => {
                self.manifest.status = RunStatus::Failed;
                self.manifest.error = Some(e.to_string());
            }
        }
        self.write_manifest()?;
        Ok(self.path)
    }
}
