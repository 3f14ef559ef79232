//! Run manifests: enough provenance to re-derive any artifact.

use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use uapflow_core::seeds::content_hash;
use uapflow_core::Result;

#[derive(Debug, Serialize)]
pub struct FileRef {
    pub path: String,
    pub fnv64: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub master_seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileRef>,
    pub outputs: Vec<FileRef>,
    pub unix_time_secs: u64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: Option<u64>, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            argv: std::env::args().collect(),
            master_seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            unix_time_secs: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(file_ref(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(file_ref(path)?);
        Ok(())
    }

    /// Write `manifest-<command>.json` into the output directory.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("manifest-{}.json", self.command));
        std::fs::write(&path, serde_json::to_vec_pretty(self)?)?;
        Ok(path)
    }
}

pub fn file_ref(path: &Path) -> Result<FileRef> {
    let bytes = std::fs::read(path)?;
    Ok(FileRef {
        path: path.display().to_string(),
        fnv64: format!("{:016x}", content_hash(&bytes)),
    })
}
