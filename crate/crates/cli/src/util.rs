//! Shared output plumbing: atomic writes, manifests, CSV helpers.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Writes bytes via a temporary file and rename, so output paths are never
/// observed half-written.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)
            .with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// The run manifest: the fully resolved configuration and seed of a run.
/// Two runs with identical manifests produce byte-identical outputs.
#[derive(Serialize)]
pub struct Manifest<T: Serialize> {
    pub command: String,
    pub seed: u64,
    pub config: T,
    pub outputs: Vec<String>,
}

pub fn write_manifest<T: Serialize>(out_dir: &Path, manifest: &Manifest<T>) -> Result<()> {
    atomic_write(&out_dir.join("manifest.json"), &to_json_bytes(manifest)?)
}

/// Builds a CSV from rows of display-ready cells.
pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row)?;
    }
    Ok(wtr.into_inner()?)
}

/// Shortest round-trippable decimal form of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Loads a TOML config file into `T`, or `T::default()` when no path given.
pub fn load_config<T>(path: &Option<PathBuf>) -> Result<T>
where
    T: serde::de::DeserializeOwned + Default,
{
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

/// Splits a dataset CSV path into (directory, stem) for `Dataset::read_files`.
pub fn dataset_dir_and_name(path: &Path) -> Result<(PathBuf, String)> {
    let dir = path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.to_string())
        .ok_or_else(|| anyhow::anyhow!("dataset path {} has no file stem", path.display()))?;
    Ok((dir, name))
}
