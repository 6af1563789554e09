// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV, JSON and manifest writers. Files are byte-identical for identical
//! inputs; only `manifest.json` carries a timestamp.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// A CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(usize),
    B(bool),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // shortest round-trip form, so output is stable across runs
            Cell::F(v) => format!("{v:?}"),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub tool_version: String,
    pub core_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub engine: String,
    pub files: Vec<String>,
    /// Unix seconds; the one field allowed to differ between identical runs.
    pub created_unix: u64,
}

pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, OutputError> {
        std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), OutputError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len(), "{name}: ragged row");
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush().map_err(|source| OutputError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), OutputError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| OutputError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn manifest(&mut self, mut m: Manifest) -> Result<(), OutputError> {
        m.files = self.files.clone();
        self.json("manifest.json", &m)
    }
}

/// Hex SHA-256 of a serializable value's canonical JSON.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String, OutputError> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let x = 0.1 + 0.2;
        assert_eq!(Cell::F(x).render().parse::<f64>().unwrap(), x);
        assert_eq!(Cell::F(1.0).render(), "1.0");
        assert_eq!(Cell::from(None::<f64>).render(), "");
    }

    #[test]
    fn hash_is_stable() {
        let a = config_hash(&vec![1.0, 2.0]).unwrap();
        assert_eq!(a, config_hash(&vec![1.0, 2.0]).unwrap());
        assert_ne!(a, config_hash(&vec![1.0, 2.5]).unwrap());
        assert_eq!(a.len(), 64);
    }
}
