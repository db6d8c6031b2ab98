//! Run manifests: enough to reproduce a run bit for bit.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Invocation {
    Bound { table_only: bool },
    Preimages { target: Option<String> },
    Theta,
    Render,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub cli_version: String,
    pub core_version: String,
    pub invocation: Invocation,
    pub config: RunConfig,
    /// SHA-256 of the JSON form of `config`.
    pub config_hash: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub outputs: Vec<OutputFile>,
    pub created_unix: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn config_hash(config: &RunConfig) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(config)?.as_bytes()))
}

impl Manifest {
    pub fn new(invocation: Invocation, config: &RunConfig, threads: Option<usize>, outputs: Vec<OutputFile>) -> Result<Self> {
        Ok(Self {
            tool: "hypdim".into(),
            cli_version: env!("CARGO_PKG_VERSION").into(),
            core_version: hypdim_core::VERSION.into(),
            invocation,
            config: config.clone(),
            config_hash: config_hash(config)?,
            seed: config.pipeline.seed,
            threads,
            outputs,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}
