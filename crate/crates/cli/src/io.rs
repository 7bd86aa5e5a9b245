//! On-disk formats: diagnostics CSV, flat binary snapshots and their manifest.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use taxis_core::diagnostics::DiagnosticsRecord;
use taxis_core::grid::{GridSpec, ScalarField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs { path: String, source: std::io::Error },
    #[error("{path}: missing column(s) {}", .columns.join(", "))]
    MissingColumns { path: String, columns: Vec<String> },
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    Snapshot { path: String, message: String },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs { path: path.display().to_string(), source }
}

/// Header plus one row per record; floats use the shortest exact representation.
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = DiagnosticsRecord::COLUMNS.join(",");
    s.push('\n');
    for r in records {
        let row: Vec<String> = r.to_array().iter().map(|v| format!("{v:?}")).collect();
        s += &row.join(",");
        s.push('\n');
    }
    s
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), IoError> {
    fs::write(path, diagnostics_csv(records)).map_err(fs_err(path))
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>, IoError> {
    let name = path.display().to_string();
    let file = fs::File::open(path).map_err(fs_err(path))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h.map_err(fs_err(path))?,
        None => return Err(IoError::Malformed { path: name, line: 1, message: "empty file".into() }),
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut index = [0usize; 17];
    let mut missing = Vec::new();
    for (slot, want) in index.iter_mut().zip(DiagnosticsRecord::COLUMNS) {
        match cols.iter().position(|c| *c == want) {
            Some(p) => *slot = p,
            None => missing.push(want.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(IoError::MissingColumns { path: name, columns: missing });
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(fs_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(IoError::Malformed {
                path: name,
                line: k + 2,
                message: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        let mut vals = [0.0; 17];
        for (v, &c) in vals.iter_mut().zip(&index) {
            *v = fields[c].trim().parse().map_err(|_| IoError::Malformed {
                path: name.clone(),
                line: k + 2,
                message: format!("cannot parse `{}` in column {}", fields[c], cols[c]),
            })?;
        }
        out.push(DiagnosticsRecord::from_array(vals));
    }
    Ok(out)
}

/// Text header `field nx ny t`, then `nx * ny` little-endian `f64` values, row-major.
pub fn write_snapshot(path: &Path, field: &str, f: &ScalarField, t: f64) -> Result<(), IoError> {
    let g = f.grid();
    let mut buf = format!("{field} {} {} {t:?}\n", g.nx(), g.ny()).into_bytes();
    buf.reserve(8 * g.cells());
    for v in f.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(fs_err(path))?;
    file.write_all(&buf).map_err(fs_err(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: String,
    pub nx: usize,
    pub ny: usize,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn into_field(self, grid: GridSpec) -> Result<ScalarField, String> {
        if grid.nx() != self.nx || grid.ny() != self.ny {
            return Err(format!("snapshot is {}x{}, grid is {}x{}", self.nx, self.ny, grid.nx(), grid.ny()));
        }
        ScalarField::new(grid, self.values).map_err(|e| e.to_string())
    }
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, IoError> {
    let name = path.display().to_string();
    let bad = |message: String| IoError::Snapshot { path: name.clone(), message };
    let mut bytes = Vec::new();
    fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(fs_err(path))?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not text".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(bad(format!("header `{header}` should read `field nx ny t`")));
    }
    let nx: usize = parts[1].parse().map_err(|_| bad(format!("bad nx `{}`", parts[1])))?;
    let ny: usize = parts[2].parse().map_err(|_| bad(format!("bad ny `{}`", parts[2])))?;
    let t: f64 = parts[3].parse().map_err(|_| bad(format!("bad t `{}`", parts[3])))?;
    let body = &bytes[nl + 1..];
    if body.len() != 8 * nx * ny {
        return Err(bad(format!("expected {} bytes of data, found {}", 8 * nx * ny, body.len())));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(Snapshot { field: parts[0].to_string(), nx, ny, t, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub t: f64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub snapshots: Vec<ManifestEntry>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| IoError::Json { path: path.display().to_string(), source })?;
    fs::write(path, text + "\n").map_err(fs_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(fs_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}
