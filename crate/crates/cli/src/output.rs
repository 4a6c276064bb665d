//! Run manifests and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Bumped whenever a CSV column or JSON key changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// SHA-256 of each input file, in argument order.
    pub input_sha256: Vec<String>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: u64, inputs: &[&[u8]]) -> Result<Self, CliError> {
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::Io(e.to_string()))?,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            input_sha256: inputs.iter().map(|b| hex::encode(Sha256::digest(b))).collect(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }
}

/// Write-then-rename so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Shortest round-trip form; `f64` Display in Rust already guarantees that.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
