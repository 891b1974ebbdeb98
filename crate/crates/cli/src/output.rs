//! Result files shared by `solve` and `oracle`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use zics_core::DistributionTable;

use crate::CliError;

pub const MARGINAL_HEADER: [&str; 3] = ["species", "count", "probability"];
pub const MOMENT_HEADER: [&str; 3] = ["moment_label", "value", "lambda"];

/// One row of `moments.csv`; `lambda` is empty for moments without a
/// multiplier.
#[derive(Debug, Clone)]
pub struct MomentRow {
    pub label: String,
    pub value: f64,
    pub lambda: Option<f64>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// File-name-safe form of a species name.
pub fn file_stem(species: &str) -> String {
    species
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory CSV writer")
}

fn marginal_csv(rows: impl Iterator<Item = (String, u32, f64)>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MARGINAL_HEADER).expect("in-memory write");
    for (species, count, p) in rows {
        w.write_record([species, count.to_string(), p.to_string()])
            .expect("in-memory write");
    }
    finish(w)
}

fn marginal_rows<'a>(
    dist: &'a DistributionTable,
    species: &'a [String],
    j: usize,
) -> impl Iterator<Item = (String, u32, f64)> + 'a {
    let lo = dist.space().bounds()[j].0;
    dist.marginal(j)
        .into_iter()
        .enumerate()
        .map(move |(k, p)| (species[j].clone(), lo + k as u32, p))
}

/// Writes `marginals.csv` (all species) and `marginal_<species>.csv`.
pub fn write_marginals(
    dir: &Path,
    dist: &DistributionTable,
    species: &[String],
) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    let all = marginal_csv((0..species.len()).flat_map(|j| marginal_rows(dist, species, j)));
    let path = dir.join("marginals.csv");
    write_file(&path, &all)?;
    files.push(path);
    for (j, name) in species.iter().enumerate() {
        let path = dir.join(format!("marginal_{}.csv", file_stem(name)));
        write_file(&path, &marginal_csv(marginal_rows(dist, species, j)))?;
        files.push(path);
    }
    Ok(files)
}

/// Writes the joint distribution as `distribution.csv` with one column per
/// species followed by `probability`.
pub fn write_distribution(
    dir: &Path,
    dist: &DistributionTable,
    species: &[String],
) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = species.to_vec();
    header.push("probability".into());
    w.write_record(&header).expect("in-memory write");
    for (state, p) in dist.iter() {
        let mut rec: Vec<String> = state.iter().map(u32::to_string).collect();
        rec.push(p.to_string());
        w.write_record(&rec).expect("in-memory write");
    }
    let path = dir.join("distribution.csv");
    write_file(&path, &finish(w))?;
    Ok(path)
}

pub fn write_moments(dir: &Path, rows: &[MomentRow]) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MOMENT_HEADER).expect("in-memory write");
    for r in rows {
        let lambda = r.lambda.map(|l| l.to_string()).unwrap_or_default();
        w.write_record([r.label.clone(), r.value.to_string(), lambda])
            .expect("in-memory write");
    }
    let path = dir.join("moments.csv");
    write_file(&path, &finish(w))?;
    Ok(path)
}

/// Reads a marginal CSV; returns `(species, count, probability)` rows.
pub fn read_marginals(path: &Path) -> Result<Vec<(String, u32, f64)>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| io_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != MARGINAL_HEADER {
        return Err(CliError::Input(format!(
            "{}: expected header `{}`",
            path.display(),
            MARGINAL_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let bad = || CliError::Input(format!("{}: malformed row {}", path.display(), line + 1));
        let count = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let p = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        rows.push((rec[0].to_string(), count, p));
    }
    Ok(rows)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct NetworkRef {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written as `manifest.json` next to every result set.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub network: NetworkRef,
    pub species: Vec<String>,
    pub space: Vec<(u32, u32)>,
    pub threads: usize,
    pub config: serde_json::Value,
    pub elapsed_seconds: f64,
    pub outcome: serde_json::Value,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_file(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// File names relative to `dir`, for the manifest.
pub fn relative_names(dir: &Path, files: &[PathBuf]) -> Vec<String> {
    files
        .iter()
        .map(|f| {
            f.strip_prefix(dir)
                .unwrap_or(f)
                .to_string_lossy()
                .into_owned()
        })
        .collect()
}
