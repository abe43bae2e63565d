//! On-disk field format: a JSON manifest plus a headerless binary payload of
//! little-endian `f64` values in space-major / time-minor order.
//!
//! ```json
//! {
//!   "name": "sin_gauss",
//!   "space": {"ndim": 1, "shape": [65], "spacing": [0.015625], "origin": [0.0]},
//!   "time": {"t0": 0.0, "dt": 0.00390625, "n": 257},
//!   "data": "sin_gauss.bin"
//! }
//! ```
//!
//! `data` is resolved relative to the directory holding the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpaceGrid, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceManifest {
    pub ndim: usize,
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeManifest {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldManifest {
    pub name: String,
    pub space: SpaceManifest,
    pub time: TimeManifest,
    pub data: String,
}

impl FieldManifest {
    fn describe(name: &str, field: &Field, data: String) -> Self {
        let space = field.space();
        let time = field.time();
        FieldManifest {
            name: name.to_string(),
            space: SpaceManifest {
                ndim: space.ndim(),
                shape: space.shape().to_vec(),
                spacing: space.spacing().to_vec(),
                origin: space.origin().to_vec(),
            },
            time: TimeManifest {
                t0: time.t0,
                dt: time.dt,
                n: time.n,
            },
            data,
        }
    }

    fn grids(&self, path: &Path) -> Result<(SpaceGrid, TimeGrid)> {
        if self.space.ndim != self.space.shape.len() {
            return Err(Error::manifest(
                path,
                format!(
                    "ndim {} disagrees with shape of length {}",
                    self.space.ndim,
                    self.space.shape.len()
                ),
            ));
        }
        let space = SpaceGrid::new(
            self.space.shape.clone(),
            self.space.spacing.clone(),
            self.space.origin.clone(),
        )
        .map_err(|e| Error::manifest(path, e.to_string()))?;
        let time = TimeGrid::new(self.time.t0, self.time.dt, self.time.n)
            .map_err(|e| Error::manifest(path, e.to_string()))?;
        Ok((space, time))
    }
}

fn data_path(manifest_path: &Path, data: &str) -> PathBuf {
    manifest_path
        .parent()
        .unwrap_or_else(|| Path::new(""))
        .join(data)
}

/// Reads a field and the `name` recorded in its manifest.
pub fn read_named_field(manifest_path: impl AsRef<Path>) -> Result<(String, Field)> {
    let path = manifest_path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: FieldManifest =
        serde_json::from_str(&text).map_err(|e| Error::manifest(path, e.to_string()))?;
    let (space, time) = manifest.grids(path)?;

    let bin_path = data_path(path, &manifest.data);
    let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let expected = space.len() * time.n;
    if bytes.len() % 8 != 0 || bytes.len() / 8 != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: bytes.len() / 8,
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")))
        .collect();
    Ok((manifest.name, Field::new(space, time, values)?))
}

pub fn read_field(manifest_path: impl AsRef<Path>) -> Result<Field> {
    read_named_field(manifest_path).map(|(_, f)| f)
}

/// Writes `field` as `<manifest>` plus a sibling `<stem>.bin` payload.
pub fn write_named_field(field: &Field, name: &str, manifest_path: impl AsRef<Path>) -> Result<()> {
    let path = manifest_path.as_ref();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::manifest(path, "manifest path has no usable file stem"))?;
    let data = format!("{stem}.bin");
    let bin_path = data_path(path, &data);

    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin_path, bytes).map_err(|e| Error::io(&bin_path, e))?;

    let manifest = FieldManifest::describe(name, field, data);
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::manifest(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `field` using the manifest's file stem as its name.
pub fn write_field(field: &Field, manifest_path: impl AsRef<Path>) -> Result<()> {
    let path = manifest_path.as_ref();
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("field")
        .to_string();
    write_named_field(field, &name, path)
}
