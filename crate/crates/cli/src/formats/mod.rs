//! On-disk formats: JSON spec files, score-law files and the strict reader
//! they share.

pub mod law;
pub mod spec;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use moduli_core::model::Violation;
use serde::de::{DeserializeOwned, Error as _, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: at `{field}`: {message}")]
    Syntax {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("{path}: unknown field(s): {}", .fields.join(", "))]
    UnknownFields { path: PathBuf, fields: Vec<String> },
    #[error("{path}: {}", join(.violations))]
    Invalid {
        path: PathBuf,
        violations: Vec<Violation>,
    },
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("{}: {}", x.field, x.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl FormatError {
    pub fn invalid(path: &Path, field: &str, message: impl Into<String>) -> Self {
        FormatError::Invalid {
            path: path.to_path_buf(),
            violations: vec![Violation::new(field, message)],
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// True for content problems, false for filesystem problems.
    pub fn is_validation(&self) -> bool {
        !matches!(self, FormatError::Io { .. })
    }
}

/// Unknown-field policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Strict,
    /// Unknown fields are ignored.
    Permissive,
}

pub fn read_file(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

/// Deserializes `text`, reporting errors with their field path. In strict
/// mode any field the schema does not know is an error.
pub fn from_json<T: DeserializeOwned>(
    text: &str,
    path: &Path,
    mode: Mode,
) -> Result<T, FormatError> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let value = {
        let mut record = |p: serde_ignored::Path<'_>| unknown.push(p.to_string());
        let ignoring = serde_ignored::Deserializer::new(&mut de, &mut record);
        serde_path_to_error::deserialize(ignoring).map_err(|e| FormatError::Syntax {
            path: path.to_path_buf(),
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?
    };
    de.end().map_err(|e| FormatError::Syntax {
        path: path.to_path_buf(),
        field: ".".into(),
        message: e.to_string(),
    })?;
    if mode == Mode::Strict && !unknown.is_empty() {
        return Err(FormatError::UnknownFields {
            path: path.to_path_buf(),
            fields: unknown,
        });
    }
    Ok(value)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory JSON serialization");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| FormatError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| FormatError::io(path, e))
}

/// Shortest decimal text that parses back to the same double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// A double carried as a decimal string, so that its value survives any
/// JSON tooling bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decimal(pub f64);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_f64(self.0))
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let x: f64 = s
            .trim()
            .parse()
            .map_err(|e| D::Error::custom(format!("`{s}` is not a decimal number: {e}")))?;
        if !x.is_finite() {
            return Err(D::Error::custom(format!("`{s}` is not finite")));
        }
        Ok(Decimal(x))
    }
}

/// String map that rejects repeated keys instead of keeping the last one.
pub fn unique_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, String>, D::Error> {
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = BTreeMap<String, String>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a map of strings")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((k, v)) = m.next_entry::<String, String>()? {
                if out.contains_key(&k) {
                    return Err(A::Error::custom(format!("duplicate key `{k}`")));
                }
                out.insert(k, v);
            }
            Ok(out)
        }
    }
    d.deserialize_map(V)
}
