//! Score laws on disk: a JSON header next to a little-endian f64 column
//! file holding the samples row-major.

use std::path::{Path, PathBuf};

use moduli_core::eval::{Provenance, ScoreLaw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{from_json, read_file, to_json, write_file, FormatError, Mode};

pub const LAW_SCHEMA: &str = "moduli.law/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawHeader {
    pub schema: String,
    pub battery_id: String,
    /// Region tag of the battery in the moduli space.
    pub region: String,
    pub panel_ids: Vec<String>,
    pub n_samples: usize,
    pub seed_root: u64,
    pub dim: usize,
    /// Data file name, relative to the header's directory.
    pub data: String,
    /// Hex SHA-256 of the data file.
    pub sha256: String,
}

/// A law read from disk together with its region tag.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredLaw {
    pub law: ScoreLaw,
    pub region: String,
}

/// Data file path for a header path: `x.json` ↦ `x.bin`.
pub fn data_path(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

pub fn encode(samples: &[f64]) -> Vec<u8> {
    samples.iter().flat_map(|x| x.to_le_bytes()).collect()
}

/// Writes the header and data files; returns both paths.
pub fn write_law(
    header_path: &Path,
    law: &ScoreLaw,
    region: &str,
) -> Result<Vec<PathBuf>, FormatError> {
    let bytes = encode(&law.samples);
    let data = data_path(header_path);
    let header = LawHeader {
        schema: LAW_SCHEMA.into(),
        battery_id: law.provenance.battery_id.clone(),
        region: region.into(),
        panel_ids: law.provenance.panel_ids.clone(),
        n_samples: law.len(),
        seed_root: law.provenance.seed_root,
        dim: law.dim,
        data: data
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    write_file(&data, &bytes)?;
    write_file(header_path, to_json(&header).as_bytes())?;
    Ok(vec![header_path.to_path_buf(), data])
}

pub fn read_law(header_path: &Path, mode: Mode) -> Result<StoredLaw, FormatError> {
    let h: LawHeader = from_json(&read_file(header_path)?, header_path, mode)?;
    let bad = |field: &str, msg: String| FormatError::invalid(header_path, field, msg);
    if h.schema != LAW_SCHEMA {
        return Err(bad(
            "schema",
            format!("expected `{LAW_SCHEMA}`, found `{}`", h.schema),
        ));
    }
    if h.dim == 0 || h.n_samples == 0 || h.panel_ids.len() != h.dim {
        return Err(bad(
            "dim",
            "need dim >= 1, n_samples >= 1 and one panel id per column".into(),
        ));
    }
    let data = header_path
        .parent()
        .unwrap_or_else(|| Path::new(""))
        .join(&h.data);
    let bytes = std::fs::read(&data).map_err(|e| FormatError::io(&data, e))?;
    if hex::encode(Sha256::digest(&bytes)) != h.sha256 {
        return Err(bad(
            "sha256",
            format!("digest mismatch for {}", data.display()),
        ));
    }
    if bytes.len() != 8 * h.dim * h.n_samples {
        return Err(bad(
            "data",
            format!(
                "{} bytes, expected {}",
                bytes.len(),
                8 * h.dim * h.n_samples
            ),
        ));
    }
    let samples: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if let Some(i) = samples.iter().position(|x| !(0.0..=1.0).contains(x)) {
        return Err(bad("data", format!("sample component {i} outside [0,1]")));
    }
    Ok(StoredLaw {
        law: ScoreLaw {
            dim: h.dim,
            samples,
            provenance: Provenance {
                battery_id: h.battery_id,
                panel_ids: h.panel_ids,
                n_samples: h.n_samples,
                seed_root: h.seed_root,
            },
        },
        region: h.region,
    })
}
