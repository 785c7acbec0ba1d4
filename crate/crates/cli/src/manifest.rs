//! Per-invocation run manifests.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::formats::{from_json, read_file, to_json, write_file, FormatError, Mode};

pub const MANIFEST_SCHEMA: &str = "moduli.manifest/1";

/// Fixes every manifest timestamp when set (seconds since the Unix epoch).
pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool: String,
    pub tool_version: String,
    /// Arguments after the program name, without the worker-count flag.
    pub command: Vec<String>,
    /// SHA-256 over the input digests in order.
    pub config_digest: String,
    pub inputs: Vec<FileDigest>,
    pub seed_root: Option<u64>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<FileDigest>,
    pub status: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<FileDigest, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    Ok(FileDigest {
        path: path.to_string_lossy().into_owned(),
        sha256: sha256_hex(&bytes),
    })
}

/// RFC 3339 UTC time, taken from `SOURCE_DATE_EPOCH` when that is set.
pub fn timestamp() -> String {
    let secs = std::env::var(SOURCE_DATE_EPOCH)
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs() as i64)
                .unwrap_or(0)
        });
    chrono::DateTime::from_timestamp(secs, 0)
        .unwrap_or_default()
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Drops `--jobs N`, `--jobs=N` and `-j N`: the worker count never changes
/// outputs, so it is not part of the recorded command.
pub fn normalize_command(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--jobs" || a == "-j" {
            skip = true;
            continue;
        }
        if a.starts_with("--jobs=") || (a.starts_with("-j") && a.len() > 2 && !a.starts_with("--"))
        {
            continue;
        }
        out.push(a.clone());
    }
    out
}

/// Collects inputs and outputs over one invocation.
#[derive(Debug)]
pub struct ManifestBuilder {
    command: Vec<String>,
    seed_root: Option<u64>,
    started: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn start(args: &[String], seed_root: Option<u64>) -> Self {
        ManifestBuilder {
            command: normalize_command(args),
            seed_root,
            started: timestamp(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), FormatError> {
        self.inputs.push(digest_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn outputs(&self) -> &[PathBuf] {
        &self.outputs
    }

    pub fn finish(self, status: &str) -> Result<RunManifest, FormatError> {
        let mut h = Sha256::new();
        for d in &self.inputs {
            h.update(d.sha256.as_bytes());
            h.update(b"\n");
        }
        let outputs = self
            .outputs
            .iter()
            .map(|p| digest_file(p))
            .collect::<Result<_, _>>()?;
        Ok(RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            config_digest: hex::encode(h.finalize()),
            inputs: self.inputs,
            seed_root: self.seed_root,
            started: self.started,
            finished: timestamp(),
            outputs,
            status: status.into(),
        })
    }
}

pub fn write_manifest(path: &Path, m: &RunManifest) -> Result<(), FormatError> {
    write_file(path, to_json(m).as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, FormatError> {
    from_json(&read_file(path)?, path, Mode::Strict)
}

/// Recomputes every output digest, resolving relative paths against
/// `base`. Returns the paths whose contents no longer match.
pub fn verify(m: &RunManifest, base: &Path) -> Result<Vec<String>, FormatError> {
    let mut bad = Vec::new();
    for d in &m.outputs {
        let p = base.join(&d.path);
        if digest_file(&p)?.sha256 != d.sha256 {
            bad.push(d.path.clone());
        }
    }
    Ok(bad)
}
