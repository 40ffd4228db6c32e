//! Versioned JSON run configuration.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Geometry, GridSpec, EARTH_RADIUS_M};
use crate::inflated::TimeUnit;
use crate::quadrature::QuadratureOptions;
use crate::seba::SebaInit;
use crate::spectrum::{ClassifyOptions, EigenOptions};
use crate::velocity::{SwitchingDoubleGyre, Units};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub velocity: VelocityConfig,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub epsilon: Param,
    #[serde(default)]
    pub a: Param,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default)]
    pub classify: ClassifyOptions,
    #[serde(default)]
    pub seba: SebaConfig,
    #[serde(default)]
    pub quadrature: QuadratureOptions,
    pub output: PathBuf,
    #[serde(default)]
    pub export: ExportConfig,
    /// Also write the assembled matrix in coordinate format.
    #[serde(default)]
    pub dump_matrix: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub geometry: Geometry,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    #[serde(default = "default_radius")]
    pub earth_radius: f64,
}

fn default_radius() -> f64 {
    EARTH_RADIUS_M
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

/// A time stamp: model units, or ISO-8601 converted to days since
/// 1970-01-01T00:00:00.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeValue {
    Number(f64),
    Calendar(String),
}

impl TimeValue {
    pub fn is_calendar(&self) -> bool {
        matches!(self, TimeValue::Calendar(_))
    }

    pub fn to_days(&self) -> Result<f64> {
        match self {
            TimeValue::Number(x) => Ok(*x),
            TimeValue::Calendar(s) => parse_calendar(s),
        }
    }
}

fn parse_calendar(s: &str) -> Result<f64> {
    let bad = || Error::config(format!("`{s}` is not an ISO-8601 date or date-time"));
    let naive = if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        dt.naive_utc()
    } else if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        dt
    } else if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M") {
        dt
    } else {
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map_err(|_| bad())?
            .and_hms_opt(0, 0, 0)
            .ok_or_else(bad)?
    };
    Ok(naive.and_utc().timestamp() as f64 / 86_400.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub start: TimeValue,
    pub end: TimeValue,
    /// Number of intervals `T`; there are `T + 1` nodes.
    #[serde(default)]
    pub steps: Option<usize>,
    /// Node spacing; alternative to `steps`.
    #[serde(default)]
    pub step: Option<f64>,
    /// Defaults to days when the bounds are calendar stamps.
    #[serde(default)]
    pub unit: Option<TimeUnit>,
}

impl TimeConfig {
    pub fn unit(&self) -> TimeUnit {
        self.unit.unwrap_or(if self.start.is_calendar() || self.end.is_calendar() {
            TimeUnit::Days
        } else {
            TimeUnit::Model
        })
    }

    /// Node times `t_0 < … < t_T`.
    pub fn nodes(&self) -> Result<Vec<f64>> {
        let start = self.start.to_days()?;
        let end = self.end.to_days()?;
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::config(format!("time end must exceed start (got {start} .. {end})")));
        }
        let steps = match (self.steps, self.step) {
            (Some(_), Some(_)) => return Err(Error::config("give either time.steps or time.step, not both")),
            (None, None) => return Err(Error::config("time.steps or time.step is required")),
            (Some(0), None) => return Err(Error::config("time.steps must be at least 1")),
            (Some(s), None) => s,
            (None, Some(h)) => {
                if !(h > 0.0) {
                    return Err(Error::config("time.step must be positive"));
                }
                let t = (end - start) / h;
                let rounded = t.round();
                if rounded < 1.0 || (t - rounded).abs() > 1e-9 * t.max(1.0) {
                    return Err(Error::config(format!("time.step {h} does not divide the interval {}", end - start)));
                }
                rounded as usize
            }
        };
        let h = (end - start) / steps as f64;
        Ok((0..=steps)
            .map(|l| if l == steps { end } else { start + l as f64 * h })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityConfig {
    SwitchingDoubleGyre {
        #[serde(default = "default_speed_scale")]
        speed_scale: f64,
    },
    Vortex {
        centre: [f64; 2],
        #[serde(default)]
        drift: [f64; 2],
        max_speed: f64,
        core_radius: f64,
        #[serde(default)]
        units: Option<Units>,
    },
    Constant {
        u: f64,
        v: f64,
    },
    /// VGRID manifest (`.json`) or CSV fallback (`.csv`).
    #[serde(alias = "vgrid")]
    Gridded {
        path: PathBuf,
    },
}

fn default_speed_scale() -> f64 {
    SwitchingDoubleGyre::BENCHMARK_SPEED_SCALE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Inflated,
    Averaged,
}

/// `"auto"` or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Param {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for Param {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Param::Auto => s.serialize_str("auto"),
            Param::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Param::Value(v)),
            Raw::Text(s) if s == "auto" => Ok(Param::Auto),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("expected \"auto\" or a number, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SebaConfig {
    /// 1-based eigenvector indices; empty skips the SEBA stage.
    pub vectors: Vec<usize>,
    pub mu: Option<f64>,
    pub cutoff: f64,
    pub init: SebaInit,
}

impl Default for SebaConfig {
    fn default() -> Self {
        SebaConfig {
            vectors: Vec::new(),
            mu: None,
            cutoff: 0.1,
            init: SebaInit::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    /// Time-node indices to export; `None` exports every node.
    pub times: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output);
        if let VelocityConfig::Gridded { path } = &mut self.velocity {
            fix(path);
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            geometry: self.domain.geometry,
            x_range: self.domain.x_range,
            y_range: self.domain.y_range,
            nx: self.grid.nx,
            ny: self.grid.ny,
            earth_radius: self.domain.earth_radius,
        }
    }

    /// Checks everything that can be checked without touching the data.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let nodes = self.time.nodes()?;
        if self.mode == Mode::Inflated && nodes.len() < 2 {
            return Err(Error::config("inflated mode needs at least 2 time nodes"));
        }
        for (name, p) in [("epsilon", self.epsilon), ("a", self.a)] {
            if let Param::Value(v) = p {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::config(format!("{name} must be a finite value >= 0 (got {v})")));
                }
            }
        }
        if self.eigen.k == 0 {
            return Err(Error::config("eigen.k must be at least 1"));
        }
        if !(self.eigen.tol > 0.0) {
            return Err(Error::config("eigen.tol must be positive"));
        }
        if !(0.0..1.0).contains(&self.seba.cutoff) {
            return Err(Error::config("seba.cutoff must lie in [0, 1)"));
        }
        if let Some(mu) = self.seba.mu {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::config("seba.mu must lie in (0, 1)"));
            }
        }
        if let Some(&bad) = self.seba.vectors.iter().find(|&&i| i == 0 || i > self.eigen.k) {
            return Err(Error::config(format!(
                "seba.vectors entry {bad} is outside 1..={}",
                self.eigen.k
            )));
        }
        let n_t = if self.mode == Mode::Averaged { 1 } else { nodes.len() };
        if let Some(times) = &self.export.times {
            if let Some(&bad) = times.iter().find(|&&l| l >= n_t) {
                return Err(Error::config(format!("export time index {bad} is outside 0..{n_t}")));
            }
        }
        if let VelocityConfig::Gridded { path } = &self.velocity {
            if !path.exists() {
                return Err(Error::config(format!("velocity data {} does not exist", path.display())));
            }
        }
        if self.grid.nx == 0 || self.grid.ny == 0 {
            return Err(Error::config("grid.nx and grid.ny must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gyre_json() -> &'static str {
        r#"{
            "version": 1,
            "domain": {"geometry": "planar", "x_range": [0, 3], "y_range": [0, 2]},
            "grid": {"nx": 75, "ny": 50},
            "time": {"start": 0, "end": 1, "steps": 20},
            "velocity": {"source": "switching_double_gyre"},
            "a": 0.45,
            "eigen": {"k": 10},
            "seba": {"vectors": [1, 2]},
            "output": "out"
        }"#
    }

    #[test]
    fn parses_the_benchmark_config() {
        let c: RunConfig = serde_json::from_str(gyre_json()).unwrap();
        c.validate().unwrap();
        assert_eq!(c.epsilon, Param::Auto);
        assert_eq!(c.a, Param::Value(0.45));
        assert_eq!(c.velocity, VelocityConfig::SwitchingDoubleGyre { speed_scale: 20.0 });
        assert_eq!(c.seba.cutoff, 0.1);
        let nodes = c.time.nodes().unwrap();
        assert_eq!(nodes.len(), 21);
        assert_eq!(nodes[20], 1.0);
        assert!((nodes[1] - 0.05).abs() < 1e-15);
        assert_eq!(c.time.unit(), TimeUnit::Model);
    }

    #[test]
    fn step_and_calendar_times() {
        let t = TimeConfig {
            start: TimeValue::Calendar("2021-06-01".into()),
            end: TimeValue::Calendar("2021-06-12T00:00:00Z".into()),
            steps: None,
            step: Some(0.25),
            unit: None,
        };
        let nodes = t.nodes().unwrap();
        assert_eq!(nodes.len(), 45);
        assert!((nodes[44] - nodes[0] - 11.0).abs() < 1e-9);
        assert_eq!(t.unit(), TimeUnit::Days);
        assert_eq!(TimeValue::Calendar("1970-01-02".into()).to_days().unwrap(), 1.0);
        assert!(TimeValue::Calendar("June".into()).to_days().is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c: RunConfig = serde_json::from_str(gyre_json()).unwrap();
        c.seba.vectors = vec![11];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c: RunConfig = serde_json::from_str(gyre_json()).unwrap();
        c.version = 2;
        assert!(c.validate().is_err());
        let mut c: RunConfig = serde_json::from_str(gyre_json()).unwrap();
        c.time.step = Some(0.3);
        assert!(c.validate().is_err());
        let bad = gyre_json().replace("\"a\": 0.45", "\"a\": \"big\"");
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
        let bad = gyre_json().replace("\"a\": 0.45", "\"alpha\": 0.45");
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
    }

    #[test]
    fn params_round_trip() {
        for p in [Param::Auto, Param::Value(0.25)] {
            let s = serde_json::to_string(&p).unwrap();
            assert_eq!(serde_json::from_str::<Param>(&s).unwrap(), p);
        }
    }
}
