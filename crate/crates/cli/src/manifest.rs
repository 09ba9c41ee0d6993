//! Run manifests and digest-tracked output directories.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use skdv_core::rng::SEED_RULE;
use skdv_core::trajectory::BINARY_VERSION;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Simulate,
    Moments,
    Aldous,
    ValidateModel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to regenerate an output directory. Contains no
/// timestamps or host paths, so a replay reproduces it byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: CommandKind,
    pub seed: u64,
    pub seed_rule: String,
    pub trajectory_binary_version: u32,
    pub config: ExperimentConfig,
    pub files: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: CommandKind, config: &ExperimentConfig, files: Vec<FileDigest>) -> Self {
        let mut config = config.clone();
        config.output.dir = None;
        Self {
            tool: "skdv".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: skdv_core::VERSION.into(),
            command,
            seed: config.solver.seed,
            seed_rule: SEED_RULE.into(),
            trajectory_binary_version: BINARY_VERSION,
            config,
            files,
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let table: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config {
            key: "<manifest>".into(),
            message: e.to_string().trim().to_string(),
        })?;
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| CliError::Config {
            key: e.path().to_string(),
            message: e.inner().to_string().trim().to_string(),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory that records a digest for every file written.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileDigest {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Writes the manifest last and returns it.
    pub fn finish(self, command: CommandKind, config: &ExperimentConfig) -> Result<Manifest, CliError> {
        let manifest = Manifest::new(command, config, self.files);
        let path = self.root.join(MANIFEST_NAME);
        fs::write(&path, manifest.to_toml_string()).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
