use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use geoprobe::probe::LambdaPolicy;
use geoprobe::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to each output as `<stem>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub lambda_policy: Option<LambdaPolicy>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            lambda_policy: None,
            parameters: BTreeMap::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: file_sha256(path)?,
        });
        Ok(())
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), value);
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            context: "run manifest".into(),
            source: e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            context: format!("run manifest {}", path.display()),
            source: e,
        })
    }
}

/// `out/report.json` → `out/report.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    sibling(output, "manifest.json")
}

/// Replaces the last extension of `output` with `suffix`.
pub fn sibling(output: &Path, suffix: &str) -> PathBuf {
    output.with_extension(suffix)
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}
