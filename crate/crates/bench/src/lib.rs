//! Shared fixtures for the criterion benches: the switching double gyre on
//! the benchmark domain at a chosen resolution.

use infgen_core::generator::{slice_generators, GeneratorMatrix};
use infgen_core::grid::{Grid, GridSpec};
use infgen_core::inflated::{assemble, epsilon_heuristic, InflatedGenerator};
use infgen_core::velocity::{median_speed, SwitchingDoubleGyre};
use infgen_core::QuadratureOptions;

/// Coupling strength of the double-gyre configuration.
pub const GYRE_A: f64 = 0.45;

pub struct GyreCase {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub epsilon: f64,
    pub field: SwitchingDoubleGyre,
    pub quad: QuadratureOptions,
}

impl GyreCase {
    /// `nx × ny` boxes on `[0, 3] × [0, 2]`, `n_t` nodes on `[0, 1]`.
    pub fn new(nx: usize, ny: usize, n_t: usize) -> Self {
        let grid = Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), nx, ny)).expect("valid grid");
        let times: Vec<f64> = (0..n_t).map(|l| l as f64 / (n_t - 1) as f64).collect();
        let field = SwitchingDoubleGyre::benchmark();
        let speed = median_speed(&field, &grid, &times).expect("field defined on the nodes");
        GyreCase {
            epsilon: epsilon_heuristic(speed, grid.median_side_length()),
            grid,
            times,
            field,
            quad: QuadratureOptions::coarse(),
        }
    }

    pub fn slices(&self) -> Vec<GeneratorMatrix> {
        slice_generators(&self.grid, &self.field, &self.times, self.epsilon, &self.quad).expect("assembly succeeds")
    }

    pub fn inflated(&self) -> InflatedGenerator {
        assemble(&self.slices(), GYRE_A, self.times[1] - self.times[0]).expect("slices share the grid")
    }
}
