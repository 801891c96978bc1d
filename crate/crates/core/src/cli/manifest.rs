use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Everything needed to rerun a command. Output paths are relative to the
/// output directory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: String,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub tool_version: String,
}

#[derive(Serialize)]
struct Stamped<'a> {
    run: &'a RunManifest,
    /// Seconds since the Unix epoch; the only field that varies between reruns.
    created_at: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: String, seeds: Vec<u64>) -> Self {
        Self {
            command: command.into(),
            config,
            seeds,
            inputs: Vec::new(),
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    /// Digests `out/name` and records it under `name`.
    pub fn output(&mut self, out: &Path, name: &str) -> Result<(), CliError> {
        let d = FileDigest::of(&out.join(name))?;
        self.outputs.push(FileDigest {
            path: name.into(),
            ..d
        });
        Ok(())
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf, CliError> {
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let text = serde_json::to_string_pretty(&Stamped {
            run: self,
            created_at,
        })
        .expect("manifest serializes");
        let path = out.join(MANIFEST_FILE);
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
