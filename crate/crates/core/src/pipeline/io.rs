//! On-disk layout for window sets: `<name>.bin` holds little-endian `f64`
//! values in row-major `N × w × F` order, `<name>.json` the header.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::encode::EncodingReport;
use crate::window::{WindowBatch, WindowSet, WindowShape};
use crate::{Error, Result};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    /// `[windows, instants, features]`
    pub shape: [usize; 3],
    pub dtype: String,
    pub order: String,
    pub stride: usize,
    pub labels: Vec<u8>,
    pub origins: Vec<usize>,
}

fn paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{name}.bin")), dir.join(format!("{name}.json")))
}

pub fn write_window_set(dir: &Path, name: &str, set: &WindowSet) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (bin, json) = paths(dir, name);
    let shape = set.shape();
    let mut bytes = Vec::with_capacity(set.batch.as_slice().len() * 8);
    for v in set.batch.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
    let header = MatrixHeader {
        shape: [set.len(), shape.instants, shape.features],
        dtype: "f64-le".into(),
        order: "row-major".into(),
        stride: set.stride,
        labels: set.labels.clone(),
        origins: set.origins.clone(),
    };
    write_json(&json, &header)
}

pub fn read_window_set(dir: &Path, name: &str) -> Result<WindowSet> {
    let (bin, json) = paths(dir, name);
    let header: MatrixHeader = read_json(&json)?;
    if header.dtype != "f64-le" {
        return Err(Error::Data(format!("{}: unsupported dtype {}", json.display(), header.dtype)));
    }
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let [n, w, f] = header.shape;
    if bytes.len() != n * w * f * 8 {
        return Err(Error::Data(format!(
            "{}: {} bytes do not match shape {n}x{w}x{f}",
            bin.display(),
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let batch = WindowBatch::new(WindowShape::new(w, f), data)?;
    WindowSet::new(batch, header.labels, header.origins, header.stride)
}

pub fn write_report(dir: &Path, report: &EncodingReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join(REPORT_FILE), report)
}

pub fn read_report(dir: &Path) -> Result<EncodingReport> {
    read_json(&dir.join(REPORT_FILE))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
