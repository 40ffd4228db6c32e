//! Gridded velocity data in the VGRID v1 layout (JSON manifest plus a raw
//! little-endian `f64` payload) or the small-dataset CSV fallback.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{check_time, Units, VelocityField};
use crate::error::{Error, Result};

pub const VGRID_ORDER: &str = "time-major, then lat, then lon";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Bilinear,
    Nearest,
}

/// Velocity samples on a `(time, lat, lon)` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedVelocity {
    lon: Vec<f64>,
    lat: Vec<f64>,
    time: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    units: String,
    pub interpolation: Interpolation,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    version: u32,
    lon: Vec<f64>,
    lat: Vec<f64>,
    time: Vec<f64>,
    units: String,
    payload: String,
    order: String,
    endianness: String,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::ingestion(name, "axis is empty"));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::ingestion(name, "axis has non-finite entries"));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::ingestion(name, "axis is not strictly increasing"));
    }
    Ok(())
}

fn check_samples(name: &str, data: &[f64]) -> Result<()> {
    if let Some(k) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::ingestion(name, format!("non-finite sample at flat index {k}")));
    }
    Ok(())
}

impl GriddedVelocity {
    /// Builds from axes and `(time, lat, lon)`-ordered component arrays.
    pub fn new(
        lon: Vec<f64>,
        lat: Vec<f64>,
        time: Vec<f64>,
        u: Vec<f64>,
        v: Vec<f64>,
        units: impl Into<String>,
    ) -> Result<Self> {
        check_axis("lon", &lon)?;
        check_axis("lat", &lat)?;
        check_axis("time", &time)?;
        let n = lon.len() * lat.len() * time.len();
        if u.len() != n {
            return Err(Error::ingestion("u", format!("expected {n} samples, found {}", u.len())));
        }
        if v.len() != n {
            return Err(Error::ingestion("v", format!("expected {n} samples, found {}", v.len())));
        }
        check_samples("u", &u)?;
        check_samples("v", &v)?;
        Ok(GriddedVelocity {
            lon,
            lat,
            time,
            u,
            v,
            units: units.into(),
            interpolation: Interpolation::Bilinear,
        })
    }

    pub fn lon(&self) -> &[f64] {
        &self.lon
    }

    pub fn lat(&self) -> &[f64] {
        &self.lat
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn units_label(&self) -> &str {
        &self.units
    }

    fn index(&self, l: usize, j: usize, i: usize) -> usize {
        (l * self.lat.len() + j) * self.lon.len() + i
    }

    /// Nearest time slice.
    fn slice_for(&self, t: f64) -> usize {
        match self.time.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(l) => l,
            Err(0) => 0,
            Err(l) if l == self.time.len() => l - 1,
            Err(l) => {
                if t - self.time[l - 1] <= self.time[l] - t {
                    l - 1
                } else {
                    l
                }
            }
        }
    }

    /// Value on the slice at `(x, y)`, clamped to the data extent.
    fn sample(&self, l: usize, x: f64, y: f64) -> [f64; 2] {
        let (i0, i1, wx) = bracket(&self.lon, x);
        let (j0, j1, wy) = bracket(&self.lat, y);
        match self.interpolation {
            Interpolation::Nearest => {
                let i = if wx < 0.5 { i0 } else { i1 };
                let j = if wy < 0.5 { j0 } else { j1 };
                let k = self.index(l, j, i);
                [self.u[k], self.v[k]]
            }
            Interpolation::Bilinear => {
                let k00 = self.index(l, j0, i0);
                let k10 = self.index(l, j0, i1);
                let k01 = self.index(l, j1, i0);
                let k11 = self.index(l, j1, i1);
                let mix = |d: &[f64]| {
                    (1.0 - wy) * ((1.0 - wx) * d[k00] + wx * d[k10])
                        + wy * ((1.0 - wx) * d[k01] + wx * d[k11])
                };
                [mix(&self.u), mix(&self.v)]
            }
        }
    }
}

/// Bracketing indices and the fractional weight of the upper one.
fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let hi = axis.partition_point(|&p| p <= x);
    let lo = hi - 1;
    let w = (x - axis[lo]) / (axis[hi] - axis[lo]);
    (lo, hi, w)
}

impl VelocityField for GriddedVelocity {
    fn eval(&self, t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
        check_time(t, self.time_interval())?;
        Ok(self.sample(self.slice_for(t), x[0], x[1]))
    }

    fn time_interval(&self) -> Option<(f64, f64)> {
        Some((self.time[0], self.time[self.time.len() - 1]))
    }

    fn units(&self) -> Units {
        if self.units == "m/s" {
            Units::MetresPerSecond
        } else {
            Units::Nondimensional
        }
    }
}

/// Loads a VGRID manifest (`.json`) or the CSV fallback (`.csv`).
pub fn load_gridded(path: &Path) -> Result<GriddedVelocity> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => load_csv(path),
        _ => load_vgrid(path),
    }
}

fn load_vgrid(path: &Path) -> Result<GriddedVelocity> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::ingestion("manifest", e.to_string()))?;
    if m.version != 1 {
        return Err(Error::ingestion("version", format!("unsupported version {}", m.version)));
    }
    if m.order != VGRID_ORDER {
        return Err(Error::ingestion("order", format!("expected \"{VGRID_ORDER}\"")));
    }
    if m.endianness != "little" {
        return Err(Error::ingestion("endianness", "only \"little\" is supported"));
    }
    check_axis("lon", &m.lon)?;
    check_axis("lat", &m.lat)?;
    check_axis("time", &m.time)?;

    let payload_path = path.parent().unwrap_or(Path::new(".")).join(&m.payload);
    let bytes = std::fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    let n = m.lon.len() * m.lat.len() * m.time.len();
    if bytes.len() != 2 * n * 8 {
        return Err(Error::ingestion(
            "payload",
            format!("expected {} bytes (u and v, {n} samples each), found {}", 16 * n, bytes.len()),
        ));
    }
    let mut data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let v = data.split_off(n);
    GriddedVelocity::new(m.lon, m.lat, m.time, data, v, m.units)
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    time: f64,
    lat: f64,
    lon: f64,
    u: f64,
    v: f64,
}

fn load_csv(path: &Path) -> Result<GriddedVelocity> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::ingestion("csv", e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::ingestion("csv header", e.to_string()))?
        .clone();
    for col in ["time", "lat", "lon", "u", "v"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::ingestion("csv header", format!("missing column `{col}`")));
        }
    }
    let rows: Vec<CsvRow> = rdr
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::ingestion("csv", e.to_string()))?;
    let axis = |key: fn(&CsvRow) -> f64| {
        let mut a: Vec<f64> = rows.iter().map(key).collect();
        a.sort_by(f64::total_cmp);
        a.dedup();
        a
    };
    let time = axis(|r| r.time);
    let lat = axis(|r| r.lat);
    let lon = axis(|r| r.lon);
    let n = time.len() * lat.len() * lon.len();
    if rows.len() != n {
        return Err(Error::ingestion(
            "csv",
            format!("{} rows do not form a complete {}x{}x{} lattice", rows.len(), time.len(), lat.len(), lon.len()),
        ));
    }
    let pos = |a: &[f64], x: f64| a.binary_search_by(|p| p.total_cmp(&x)).unwrap();
    let mut seen = BTreeMap::new();
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    for r in &rows {
        let k = (pos(&time, r.time) * lat.len() + pos(&lat, r.lat)) * lon.len() + pos(&lon, r.lon);
        if seen.insert(k, ()).is_some() {
            return Err(Error::ingestion("csv", format!("duplicate sample at time={} lat={} lon={}", r.time, r.lat, r.lon)));
        }
        u[k] = r.u;
        v[k] = r.v;
    }
    GriddedVelocity::new(lon, lat, time, u, v, "m/s")
}

/// Writes a VGRID manifest at `manifest_path` and its payload next to it.
pub fn write_gridded(field: &GriddedVelocity, manifest_path: &Path) -> Result<PathBuf> {
    let stem = manifest_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("vgrid");
    let payload_name = format!("{stem}.bin");
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let payload_path = dir.join(&payload_name);
    let mut bytes = Vec::with_capacity(16 * field.u.len());
    for x in field.u.iter().chain(&field.v) {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    std::fs::write(&payload_path, bytes).map_err(|e| Error::io(&payload_path, e))?;
    let m = Manifest {
        version: 1,
        lon: field.lon.clone(),
        lat: field.lat.clone(),
        time: field.time.clone(),
        units: field.units.clone(),
        payload: payload_name,
        order: VGRID_ORDER.to_string(),
        endianness: "little".to_string(),
    };
    let text = serde_json::to_string_pretty(&m).expect("manifest serialises");
    std::fs::write(manifest_path, text).map_err(|e| Error::io(manifest_path, e))?;
    Ok(payload_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn linear_in_lon() -> GriddedVelocity {
        // 2 times × 2 lat × 2 lon, u = 2·lon + 1, v = lat
        let lon = vec![10.0, 12.0];
        let lat = vec![40.0, 41.0];
        let time = vec![0.0, 1.0];
        let mut u = Vec::new();
        let mut v = Vec::new();
        for _ in &time {
            for &la in &lat {
                for &lo in &lon {
                    u.push(2.0 * lo + 1.0);
                    v.push(la);
                }
            }
        }
        GriddedVelocity::new(lon, lat, time, u, v, "m/s").unwrap()
    }

    #[test]
    fn bilinear_is_exact_on_linear_data() {
        let g = linear_in_lon();
        for (x, y) in [(11.0, 40.5), (10.3, 40.9), (12.0, 41.0)] {
            let [u, v] = g.eval(0.4, [x, y]).unwrap();
            assert_abs_diff_eq!(u, 2.0 * x + 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(v, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn nodes_reproduce_stored_values() {
        let g = linear_in_lon();
        assert_eq!(g.eval(1.0, [10.0, 41.0]).unwrap(), [21.0, 41.0]);
    }

    #[test]
    fn constant_field_everywhere_and_clamped() {
        let n = 3 * 2 * 4;
        let g = GriddedVelocity::new(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 1.0],
            vec![0.0, 0.5, 1.0],
            vec![1.0; n],
            vec![0.0; n],
            "m/s",
        )
        .unwrap();
        for p in [[0.2, 0.3], [3.0, 1.0], [-1.0, 5.0]] {
            assert_eq!(g.eval(0.7, p).unwrap(), [1.0, 0.0]);
        }
        assert!(g.eval(1.5, [0.0, 0.0]).is_err());
    }

    #[test]
    fn time_snaps_to_nearest_slice() {
        let g = GriddedVelocity::new(
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0, 2.0],
            [vec![0.0; 4], vec![1.0; 4], vec![2.0; 4]].concat(),
            vec![0.0; 12],
            "m/s",
        )
        .unwrap();
        assert_eq!(g.eval(0.4, [0.5, 0.5]).unwrap()[0], 0.0);
        assert_eq!(g.eval(0.6, [0.5, 0.5]).unwrap()[0], 1.0);
        assert_eq!(g.eval(1.9, [0.5, 0.5]).unwrap()[0], 2.0);
    }

    #[test]
    fn shape_and_value_errors_name_the_field() {
        let e = GriddedVelocity::new(vec![0.0, 1.0], vec![0.0], vec![0.0], vec![0.0], vec![0.0, 0.0], "m/s")
            .unwrap_err();
        assert!(matches!(e, Error::Ingestion { ref field, .. } if field == "u"));
        let e = GriddedVelocity::new(vec![0.0], vec![0.0], vec![0.0], vec![f64::NAN], vec![0.0], "m/s")
            .unwrap_err();
        assert!(matches!(e, Error::Ingestion { ref field, .. } if field == "u"));
        let e = GriddedVelocity::new(vec![1.0, 0.0], vec![0.0], vec![0.0], vec![0.0; 2], vec![0.0; 2], "m/s")
            .unwrap_err();
        assert!(matches!(e, Error::Ingestion { ref field, .. } if field == "lon"));
    }

    #[test]
    fn csv_fallback_loads_a_complete_lattice() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wind.csv");
        let mut text = String::from("time,lat,lon,u,v\n");
        for t in [0.0, 1.0] {
            for la in [40.0, 41.0] {
                for lo in [10.0, 12.0] {
                    text.push_str(&format!("{t},{la},{lo},{},{}\n", 2.0 * lo + 1.0, la));
                }
            }
        }
        std::fs::write(&p, &text).unwrap();
        let g = load_gridded(&p).unwrap();
        assert_eq!(g, linear_in_lon());

        std::fs::write(&p, "time,lat,lon,u\n0,0,0,1\n").unwrap();
        assert!(matches!(load_gridded(&p), Err(Error::Ingestion { .. })));
    }
}
