//! Field exports: `t,x,y,value` CSVs with JSON sidecars, and the binary
//! vector stores a run keeps for later SEBA and export passes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Geometry, Grid, GridSpec};
use crate::spectrum::{EigenClass, C64};

/// Metadata written next to every field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    /// `vec` or `seba`.
    pub kind: String,
    /// 1-based index within its kind.
    pub index: usize,
    pub grid: GridSpec,
    /// Eigenvalue as `[re, im]`; absent for SEBA vectors.
    pub eigenvalue: Option<[f64; 2]>,
    pub class: Option<EigenClass>,
    /// Which part of a complex vector the values hold.
    pub component: String,
    pub cutoff: f64,
    /// Exported time-node indices and their times.
    pub time_indices: Vec<usize>,
    pub times: Vec<f64>,
    pub rows: usize,
}

/// File stem `<kind>_<index:03>`.
pub fn field_stem(kind: &str, index: usize) -> String {
    format!("{kind}_{index:03}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// Writes the fibres `time_indices` of a spacetime vector as box-centre rows.
///
/// Values are written with the shortest representation that parses back to
/// the same `f64`.
pub fn write_field_csv(
    path: &Path,
    grid: &Grid,
    times: &[f64],
    time_indices: &[usize],
    values: &[f64],
) -> Result<usize> {
    let n = grid.len();
    if values.len() != n * times.len() {
        return Err(Error::domain(format!(
            "field of length {} does not match {} fibres of {n} boxes",
            values.len(),
            times.len()
        )));
    }
    if let Some(&l) = time_indices.iter().find(|&&l| l >= times.len()) {
        return Err(Error::config(format!("time index {l} is outside 0..{}", times.len())));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = match grid.geometry() {
        Geometry::Planar => ["t", "x", "y", "value"],
        Geometry::Spherical => ["t", "lon", "lat", "value"],
    };
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for &l in time_indices {
        let t = times[l].to_string();
        for (c, v) in grid.centres().zip(&values[l * n..(l + 1) * n]) {
            w.write_record([t.as_str(), &c[0].to_string(), &c[1].to_string(), &v.to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(time_indices.len() * n)
}

/// One row of a field CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

pub fn read_field_csv(path: &Path) -> Result<Vec<FieldRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::ingestion(path.display().to_string(), format!("bad column {i} in {rec:?}")))
            };
            Ok(FieldRow {
                t: get(0)?,
                x: get(1)?,
                y: get(2)?,
                value: get(3)?,
            })
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Stores vectors back to back as little-endian `f64`.
pub fn write_real_vectors(path: &Path, vectors: &[Vec<f64>]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for x in vectors.iter().flatten() {
        w.write_all(&x.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `count` vectors of length `len` written by [`write_real_vectors`].
pub fn read_real_vectors(path: &Path, count: usize, len: usize) -> Result<Vec<Vec<f64>>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != count * len * 8 {
        return Err(Error::ingestion(
            path.display().to_string(),
            format!("{} bytes, expected {count} vectors of {len} f64", bytes.len()),
        ));
    }
    let flat: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    Ok(flat.chunks(len.max(1)).take(count).map(<[f64]>::to_vec).collect())
}

/// Stores complex vectors as interleaved `(re, im)` little-endian pairs.
pub fn write_complex_vectors(path: &Path, vectors: &[Vec<C64>]) -> Result<()> {
    let flat: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().flat_map(|z| [z.re, z.im]).collect())
        .collect();
    write_real_vectors(path, &flat)
}

pub fn read_complex_vectors(path: &Path, count: usize, len: usize) -> Result<Vec<Vec<C64>>> {
    Ok(read_real_vectors(path, count, 2 * len)?
        .into_iter()
        .map(|v| v.chunks(2).map(|p| C64::new(p[0], p[1])).collect())
        .collect())
}
