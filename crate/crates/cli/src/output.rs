//! Artifact writing: CSV tables, JSON documents, and the per-run manifest
//! with content hashes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;
use crate::config::RunConfig;

/// Collects outputs of one command run and writes the manifest at the end.
pub struct RunWriter {
    out_dir: PathBuf,
    command: &'static str,
    outputs: BTreeMap<String, OutputEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct OutputEntry {
    sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    columns: Option<Vec<String>>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
    outputs: &'a BTreeMap<String, OutputEntry>,
}

impl RunWriter {
    pub fn new(out_dir: &Path, command: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Self { out_dir: out_dir.to_path_buf(), command, outputs: BTreeMap::new() })
    }

    fn write_bytes(
        &mut self,
        name: &str,
        bytes: &[u8],
        columns: Option<Vec<String>>,
    ) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        let digest = Sha256::digest(bytes);
        let mut sha256 = String::with_capacity(64);
        for byte in digest {
            let _ = write!(sha256, "{byte:02x}");
        }
        self.outputs.insert(name.to_string(), OutputEntry { sha256, columns });
        Ok(path)
    }

    /// Writes a CSV table: header row, one line per record, '.' decimal
    /// separator, newline-terminated final row.
    pub fn write_csv(
        &mut self,
        name: &str,
        columns: &[&str],
        rows: impl Iterator<Item = Vec<f64>>,
    ) -> Result<PathBuf, CliError> {
        let mut text = columns.join(",");
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            for (i, value) in row.iter().enumerate() {
                if i > 0 {
                    text.push(',');
                }
                let _ = write!(text, "{value}");
            }
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes(), Some(columns.iter().map(|c| c.to_string()).collect()))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Compute(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes(), None)
    }

    /// Writes `<command>.manifest.json` with the resolved config and the
    /// content hash of every produced file.
    pub fn finish(self, config: &RunConfig) -> Result<(), CliError> {
        let manifest = Manifest { command: self.command, config, outputs: &self.outputs };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Compute(format!("cannot serialize manifest: {e}")))?;
        text.push('\n');
        let path = self.out_dir.join(format!("{}.manifest.json", self.command));
        fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

/// Parses a two-column numeric CSV by header names; errors name the
/// offending line.
pub fn read_csv_columns(
    path: &Path,
    first: &str,
    second: &str,
) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{}: empty file", path.display())))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |want: &str| -> Result<usize, CliError> {
        names.iter().position(|n| *n == want).ok_or_else(|| {
            CliError::Config(format!("{}: line 1: missing column '{want}'", path.display()))
        })
    };
    let (i, j) = (col(first)?, col(second)?);
    let mut out = Vec::new();
    for (line_idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |idx: usize| -> Result<f64, CliError> {
            fields
                .get(idx)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "{}: line {}: expected {} fields, got {}",
                        path.display(),
                        line_idx + 1,
                        names.len(),
                        fields.len()
                    ))
                })?
                .parse::<f64>()
                .map_err(|e| {
                    CliError::Config(format!("{}: line {}: {e}", path.display(), line_idx + 1))
                })
        };
        out.push((parse(i)?, parse(j)?));
    }
    Ok(out)
}
