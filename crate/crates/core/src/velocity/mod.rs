//! Time-dependent velocity fields.
//!
//! Analytic fields, frozen-time and time-averaged views, and gridded data
//! with bilinear interpolation in space.

mod gridded;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use self::gridded::{load_gridded, write_gridded, GriddedVelocity, Interpolation};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Nondimensional,
    /// Velocities in m/s on a longitude/latitude grid in degrees.
    MetresPerSecond,
}

/// A velocity field `v(t, x)` on a 2-D domain.
pub trait VelocityField: Send + Sync {
    /// Evaluates the field. Fails when `t` lies outside the valid interval.
    fn eval(&self, t: f64, x: [f64; 2]) -> Result<[f64; 2]>;

    /// Valid time interval, `None` for steady fields.
    fn time_interval(&self) -> Option<(f64, f64)>;

    fn units(&self) -> Units {
        Units::Nondimensional
    }
}

impl<F: VelocityField + ?Sized> VelocityField for &F {
    fn eval(&self, t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
        (**self).eval(t, x)
    }

    fn time_interval(&self) -> Option<(f64, f64)> {
        (**self).time_interval()
    }

    fn units(&self) -> Units {
        (**self).units()
    }
}

impl<F: VelocityField + ?Sized> VelocityField for Arc<F> {
    fn eval(&self, t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
        (**self).eval(t, x)
    }

    fn time_interval(&self) -> Option<(f64, f64)> {
        (**self).time_interval()
    }

    fn units(&self) -> Units {
        (**self).units()
    }
}

pub(crate) fn check_time(t: f64, interval: Option<(f64, f64)>) -> Result<()> {
    if let Some((t0, t1)) = interval {
        let slack = 1e-9 * (t1 - t0).abs().max(1.0);
        if !(t >= t0 - slack && t <= t1 + slack) {
            return Err(Error::domain(format!(
                "time {t} outside the field's interval [{t0}, {t1}]"
            )));
        }
    }
    Ok(())
}

/// The switching double gyre on `[0,3]×[0,2]`, `t ∈ [0,1]`.
///
/// The left gyre occupies a third of the domain at `t = 0` and two thirds at
/// `t = 1`; the transition is concentrated around `t = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingDoubleGyre {
    /// Multiplies both velocity components.
    pub speed_scale: f64,
}

impl SwitchingDoubleGyre {
    /// Scale at which the benchmark's median speed is ≈14.3698.
    pub const BENCHMARK_SPEED_SCALE: f64 = 20.0;

    /// The closed form with unit scale.
    pub fn new() -> Self {
        SwitchingDoubleGyre { speed_scale: 1.0 }
    }

    /// The benchmark configuration (speed scale 20).
    pub fn benchmark() -> Self {
        SwitchingDoubleGyre {
            speed_scale: Self::BENCHMARK_SPEED_SCALE,
        }
    }

    pub fn with_speed_scale(speed_scale: f64) -> Self {
        SwitchingDoubleGyre { speed_scale }
    }

    fn switch(t: f64) -> f64 {
        0.5 * (1.0 + (10.0 * (t - 0.5)).tanh())
    }

    /// Coefficients `(α(t), β(t))` of `f(t, x) = αx² + βx`.
    pub fn coefficients(t: f64) -> (f64, f64) {
        let r = Self::switch(t);
        let alpha = (1.0 - 2.0 * r) / (3.0 * (r - 2.0) * (r + 1.0));
        let beta = (2.0 - 9.0 * alpha) / 3.0;
        (alpha, beta)
    }
}

impl Default for SwitchingDoubleGyre {
    fn default() -> Self {
        Self::new()
    }
}

impl VelocityField for SwitchingDoubleGyre {
    fn eval(&self, t: f64, p: [f64; 2]) -> Result<[f64; 2]> {
        check_time(t, self.time_interval())?;
        let [x, y] = p;
        let (alpha, beta) = Self::coefficients(t);
        let f = alpha * x * x + beta * x;
        let u = -0.5 * PI * (PI * f).sin() * (0.5 * PI * y).cos();
        let v = (2.0 * x * alpha + beta) * (PI * f).cos() * (0.5 * PI * y).sin();
        Ok([self.speed_scale * u, self.speed_scale * v])
    }

    fn time_interval(&self) -> Option<(f64, f64)> {
        Some((0.0, 1.0))
    }
}

/// Spatially and temporally constant field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField {
    pub velocity: [f64; 2],
    pub units: Units,
}

impl ConstantField {
    pub fn new(u: f64, v: f64) -> Self {
        ConstantField {
            velocity: [u, v],
            units: Units::Nondimensional,
        }
    }
}

impl VelocityField for ConstantField {
    fn eval(&self, _t: f64, _x: [f64; 2]) -> Result<[f64; 2]> {
        Ok(self.velocity)
    }

    fn time_interval(&self) -> Option<(f64, f64)> {
        None
    }

    fn units(&self) -> Units {
        self.units
    }
}

/// Gaussian-profile vortex whose centre drifts linearly in time.
///
/// Tangential speed `max_speed · (r/core) · exp((1 - (r/core)²)/2)`, which
/// peaks at `r = core`. Counter-clockwise for positive `max_speed`.
/// Distances are measured in domain coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub centre: [f64; 2],
    pub drift: [f64; 2],
    pub max_speed: f64,
    pub core_radius: f64,
    pub interval: (f64, f64),
    pub units: Units,
}

impl VelocityField for Vortex {
    fn eval(&self, t: f64, p: [f64; 2]) -> Result<[f64; 2]> {
        check_time(t, self.time_interval())?;
        let dt = t - self.interval.0;
        let dx = p[0] - (self.centre[0] + self.drift[0] * dt);
        let dy = p[1] - (self.centre[1] + self.drift[1] * dt);
        let s2 = (dx * dx + dy * dy) / (self.core_radius * self.core_radius);
        let g = self.max_speed / self.core_radius * (0.5 * (1.0 - s2)).exp();
        Ok([-g * dy, g * dx])
    }

    fn time_interval(&self) -> Option<(f64, f64)> {
        Some(self.interval)
    }

    fn units(&self) -> Units {
        self.units
    }
}

/// Field backed by a closure; handy for tests and ad-hoc experiments.
pub struct FnField<F> {
    f: F,
    interval: Option<(f64, f64)>,
}

impl<F> FnField<F>
where
    F: Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync,
{
    pub fn new(interval: Option<(f64, f64)>, f: F) -> Self {
        FnField { f, interval }
    }
}

impl<F> VelocityField for FnField<F>
where
    F: Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync,
{
    fn eval(&self, t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
        check_time(t, self.interval)?;
        Ok((self.f)(t, x))
    }

    fn time_interval(&self) -> Option<(f64, f64)> {
        self.interval
    }
}

/// Steady view of a field at a fixed time.
pub struct Frozen<F> {
    inner: F,
    time: f64,
}

impl<F: VelocityField> Frozen<F> {
    pub fn new(inner: F, time: f64) -> Result<Self> {
        check_time(time, inner.time_interval())?;
        Ok(Frozen { inner, time })
    }
}

impl<F: VelocityField> VelocityField for Frozen<F> {
    fn eval(&self, _t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
        self.inner.eval(self.time, x)
    }

    fn time_interval(&self) -> Option<(f64, f64)> {
        None
    }

    fn units(&self) -> Units {
        self.inner.units()
    }
}

/// Steady trapezoidal time average of a field over a node list.
pub struct TimeAveraged<F> {
    inner: F,
    times: Vec<f64>,
    weights: Vec<f64>,
}

impl<F: VelocityField> TimeAveraged<F> {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Normalised trapezoid weights (they sum to one).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl<F: VelocityField> VelocityField for TimeAveraged<F> {
    fn eval(&self, _t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
        let mut acc = [0.0; 2];
        for (&t, &w) in self.times.iter().zip(&self.weights) {
            let v = self.inner.eval(t, x)?;
            acc[0] += w * v[0];
            acc[1] += w * v[1];
        }
        Ok(acc)
    }

    fn time_interval(&self) -> Option<(f64, f64)> {
        None
    }

    fn units(&self) -> Units {
        self.inner.units()
    }
}

/// Trapezoidal-rule average of `field` over the increasing nodes `times`.
pub fn time_average<F: VelocityField>(field: F, times: &[f64]) -> Result<TimeAveraged<F>> {
    if times.len() < 2 {
        return Err(Error::domain("time average needs at least two nodes"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("time nodes must be strictly increasing"));
    }
    for &t in times {
        check_time(t, field.time_interval())?;
    }
    let span = times[times.len() - 1] - times[0];
    let mut weights = vec![0.0; times.len()];
    for (l, w) in times.windows(2).enumerate() {
        let half = 0.5 * (w[1] - w[0]) / span;
        weights[l] += half;
        weights[l + 1] += half;
    }
    Ok(TimeAveraged {
        inner: field,
        times: times.to_vec(),
        weights,
    })
}

/// Median of `‖v(t_l, c_i)‖₂` over time nodes `t_l` and box centres `c_i`.
pub fn median_speed<F: VelocityField + ?Sized>(field: &F, grid: &Grid, times: &[f64]) -> Result<f64> {
    if times.is_empty() || grid.is_empty() {
        return Err(Error::domain("median speed needs nodes and boxes"));
    }
    let mut speeds = Vec::with_capacity(times.len() * grid.len());
    for &t in times {
        for c in grid.centres() {
            let [u, v] = field.eval(t, c)?;
            speeds.push(u.hypot(v));
        }
    }
    Ok(median(speeds).unwrap())
}
