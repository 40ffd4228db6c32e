//! Spacetime inflated generator and the ε / a selection heuristics.
//!
//! With `n_t` equispaced time nodes of spacing `h` and per-slice generators
//! `G^{t_0}, …, G^{t_T}` on a common grid of `N` boxes,
//!
//! ```text
//! G_a = blockdiag(G^{t_0}, …, G^{t_T}) + (a²/2)·(L ⊗ I_N)
//! ```
//!
//! where `L` is the `n_t×n_t` Neumann second-difference matrix
//! `{1, −2, 1}/h²` with `−1/h²` in both corners. Spacetime index `(l, i)` is
//! stored at `l·N + i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::GeneratorMatrix;
use crate::sparse::CsrMatrix;

/// Unit in which `τ`, `h` and `a` are expressed.
///
/// `Days` marks geophysical runs where time is in days while lengths and
/// speeds are in metres and metres per second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Model,
    Days,
}

#[derive(Debug, Clone)]
pub struct InflatedGenerator {
    pub matrix: CsrMatrix,
    pub n_t: usize,
    pub n: usize,
    pub h: f64,
    pub a: f64,
    pub epsilon: f64,
    pub time_unit: TimeUnit,
}

impl InflatedGenerator {
    /// Row of spacetime box `(l, i)`.
    pub fn index(&self, l: usize, i: usize) -> usize {
        debug_assert!(l < self.n_t && i < self.n);
        l * self.n + i
    }

    pub fn dim(&self) -> usize {
        self.n_t * self.n
    }

    /// Fibre `l` of a spacetime vector.
    pub fn fibre<'v, T>(&self, v: &'v [T], l: usize) -> &'v [T] {
        &v[l * self.n..(l + 1) * self.n]
    }
}

/// `n_t×n_t` Neumann second-difference matrix with spacing `h`.
pub fn temporal_laplacian(n_t: usize, h: f64) -> CsrMatrix {
    let w = 1.0 / (h * h);
    let mut trip = Vec::with_capacity(3 * n_t);
    for l in 0..n_t {
        let mut diag = 0.0;
        if l > 0 {
            trip.push((l, l - 1, w));
            diag -= w;
        }
        if l + 1 < n_t {
            trip.push((l, l + 1, w));
            diag -= w;
        }
        trip.push((l, l, diag));
    }
    CsrMatrix::from_triplets(n_t, n_t, trip)
}

/// Assembles `G_a` from one generator per time node.
pub fn assemble(generators: &[GeneratorMatrix], a: f64, h: f64) -> Result<InflatedGenerator> {
    if generators.len() < 2 {
        return Err(Error::domain(format!(
            "inflated assembly needs at least 2 time slices (got {})",
            generators.len()
        )));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("a must be finite and >= 0 (got {a})")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("time step h must be finite and > 0 (got {h})")));
    }
    let n = generators[0].n();
    let spec = generators[0].grid;
    for (l, g) in generators.iter().enumerate() {
        if g.n() != n || !g.matrix.is_square() {
            return Err(Error::domain(format!(
                "slice {l} has {}x{} entries, expected {n}x{n}",
                g.matrix.nrows(),
                g.matrix.ncols()
            )));
        }
        if g.grid != spec {
            return Err(Error::domain(format!("slice {l} was assembled on a different grid")));
        }
    }

    let n_t = generators.len();
    let lap = temporal_laplacian(n_t, h);
    let coupling = 0.5 * a * a;
    let spatial = generators.iter().enumerate().flat_map(|(l, g)| {
        g.matrix
            .iter()
            .map(move |(i, j, v)| (l * n + i, l * n + j, v))
    });
    let temporal = lap.iter().flat_map(|(l, m, w)| {
        (0..n).map(move |i| (l * n + i, m * n + i, coupling * w))
    });
    let matrix = CsrMatrix::from_triplets(n_t * n, n_t * n, spatial.chain(temporal));

    Ok(InflatedGenerator {
        matrix,
        n_t,
        n,
        h,
        a,
        epsilon: generators[0].epsilon,
        time_unit: TimeUnit::Model,
    })
}

/// `√(0.1·speed·side)`: the diffusion added to the Ulam scheme.
pub fn epsilon_heuristic(median_speed: f64, median_side: f64) -> f64 {
    (0.1 * median_speed * median_side).sqrt()
}

/// `√(1.1·speed·side)`: applied diffusion plus the scheme's own numerical
/// diffusion. Reported only.
pub fn epsilon_total(median_speed: f64, median_side: f64) -> f64 {
    (1.1 * median_speed * median_side).sqrt()
}

/// `τ·√(1.1·speed·side)/L_max`, matching the leading temporal eigenvalue to
/// the leading spatial one. Units are taken as given: geophysical runs pass
/// `τ` in days and lengths in metres.
pub fn a_heuristic(tau: f64, median_speed: f64, median_side: f64, longest_extent: f64) -> f64 {
    tau * epsilon_total(median_speed, median_side) / longest_extent
}

/// Continuum temporal eigenvalue `−a²π²k²/(2τ²)`.
pub fn temporal_eigenvalue(a: f64, tau: f64, k: usize) -> f64 {
    let k = k as f64;
    -(a * std::f64::consts::PI * k / tau).powi(2) / 2.0
}

/// Eigenvalue `k` of `(a²/2)·L` on `n_t` nodes: `−(2a²/h²)·sin²(kπ/(2n_t))`.
pub fn discrete_temporal_eigenvalue(a: f64, h: f64, n_t: usize, k: usize) -> f64 {
    let s = (k as f64 * std::f64::consts::PI / (2.0 * n_t as f64)).sin();
    -2.0 * a * a / (h * h) * s * s
}

/// Eigenvector `k` of `L`: `cos(kπ(l + ½)/n_t)` on node `l`.
pub fn temporal_mode(n_t: usize, k: usize) -> Vec<f64> {
    (0..n_t)
        .map(|l| (k as f64 * std::f64::consts::PI * (l as f64 + 0.5) / n_t as f64).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::ulam_generator;
    use crate::grid::{Grid, GridSpec};
    use crate::quadrature::QuadratureOptions;
    use crate::velocity::{ConstantField, SwitchingDoubleGyre};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn slices(grid: &Grid, n_t: usize, eps: f64) -> Vec<GeneratorMatrix> {
        let f = SwitchingDoubleGyre::benchmark();
        let q = QuadratureOptions::tight();
        (0..n_t)
            .map(|l| ulam_generator(grid, &f, l as f64 / (n_t - 1) as f64, eps, &q).unwrap())
            .collect()
    }

    fn residual(m: &CsrMatrix, x: &[f64], lambda: f64) -> f64 {
        m.mul_vec(x)
            .iter()
            .zip(x)
            .map(|(y, x)| (y - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn heuristic_values() {
        assert_abs_diff_eq!(epsilon_heuristic(14.3698, 0.04), 0.23975, epsilon = 5e-5);
        assert_abs_diff_eq!(epsilon_heuristic(9.8360, 103618.0), 319.25, epsilon = 0.05);
        assert_abs_diff_eq!(epsilon_heuristic(10.3539, 103618.0), 327.54, epsilon = 0.05);
        assert_eq!(epsilon_heuristic(0.0, 0.04), 0.0);
        assert_abs_diff_eq!(a_heuristic(1.0, 14.3698, 0.04, 3.0), 0.26505, epsilon = 5e-5);
        assert_abs_diff_eq!(a_heuristic(11.0, 9.8360, 103618.0, 5.0038e6), 0.00233, epsilon = 1e-5);
        assert_abs_diff_eq!(a_heuristic(20.0, 10.3539, 103618.0, 5.0038e6), 0.00434, epsilon = 1e-5);
    }

    #[test]
    fn temporal_eigenvalues() {
        assert_abs_diff_eq!(temporal_eigenvalue(0.45, 1.0, 1), -0.99935, epsilon = 1e-4);
        assert_eq!(temporal_eigenvalue(0.45, 1.0, 0), 0.0);
        let d = discrete_temporal_eigenvalue(0.45, 0.05, 21, 1);
        assert_abs_diff_eq!(d, -162.0 * (std::f64::consts::PI / 42.0).sin().powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(d, -0.9058, epsilon = 2e-3);
        assert!((d - temporal_eigenvalue(0.45, 1.0, 1)).abs() / d.abs() < 0.15);
    }

    #[test]
    fn temporal_modes_are_eigenvectors_of_the_laplacian() {
        let (n_t, h) = (7, 0.2);
        let lap = temporal_laplacian(n_t, h);
        for k in 0..n_t {
            let mu = discrete_temporal_eigenvalue(1.0, h, n_t, k) / 0.5;
            assert!(residual(&lap, &temporal_mode(n_t, k), mu) < 1e-11);
        }
    }

    #[test]
    fn block_structure_and_corner_diagonals() {
        let grid = Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), 3, 2)).unwrap();
        let gs = slices(&grid, 4, 0.3);
        let (a, h) = (0.7, 1.0 / 3.0);
        let inf = assemble(&gs, a, h).unwrap();
        let w = a * a / (2.0 * h * h);
        assert_eq!(inf.dim(), 24);
        for (r, c, v) in inf.matrix.iter() {
            let (l, i) = (r / inf.n, r % inf.n);
            let (m, j) = (c / inf.n, c % inf.n);
            if l == m {
                let expected = gs[l].matrix.get(i, j)
                    - if i == j { w * if l == 0 || l == 3 { 1.0 } else { 2.0 } } else { 0.0 };
                assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
            } else {
                assert_eq!(l.abs_diff(m), 1);
                assert_eq!(i, j);
                assert_abs_diff_eq!(v, w, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn assembly_is_linear_in_a_squared() {
        let grid = Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), 6, 4)).unwrap();
        let gs = slices(&grid, 5, 0.24);
        let h = 0.25;
        let lap = temporal_laplacian(5, h);
        let zero = assemble(&gs, 0.0, h).unwrap().matrix;
        for a in [0.45, 4.5] {
            let full = assemble(&gs, a, h).unwrap().matrix;
            let diff = full.add_scaled(-1.0, &zero);
            for (r, c, v) in diff.iter() {
                let (l, i) = (r / 24, r % 24);
                let (m, j) = (c / 24, c % 24);
                let expected = if i == j { 0.5 * a * a * lap.get(l, m) } else { 0.0 };
                // one rounding of the diagonal sum is the only admissible error
                let ulp = f64::EPSILON * full.get(r, c).abs().max(zero.get(r, c).abs());
                assert!((v - expected).abs() <= ulp, "entry ({r}, {c}): {v} vs {expected}");
            }
        }
    }

    #[test]
    fn mismatched_slices_are_rejected() {
        let g1 = Grid::new(GridSpec::planar((0.0, 1.0), (0.0, 1.0), 2, 2)).unwrap();
        let g2 = Grid::new(GridSpec::planar((0.0, 1.0), (0.0, 1.0), 3, 2)).unwrap();
        let f = ConstantField::new(0.0, 0.0);
        let q = QuadratureOptions::tight();
        let a = ulam_generator(&g1, &f, 0.0, 0.1, &q).unwrap();
        let b = ulam_generator(&g2, &f, 0.0, 0.1, &q).unwrap();
        assert!(matches!(assemble(&[a.clone(), b], 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(assemble(std::slice::from_ref(&a), 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(assemble(&[a.clone(), a], 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_velocity_modes_are_kronecker_products() {
        let (nx, ny, n_t) = (6, 4, 5);
        let grid = Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), nx, ny)).unwrap();
        let eps = 0.3;
        let (a, h) = (0.8, 0.25);
        let q = QuadratureOptions::tight();
        let g = ulam_generator(&grid, &ConstantField::new(0.0, 0.0), 0.0, eps, &q).unwrap();
        let inf = assemble(&vec![g; n_t], a, h).unwrap();
        let r = eps * eps / (2.0 * 0.5 * 0.5);
        let scale = inf.matrix.frobenius_norm();
        for k in 0..n_t {
            let ct = temporal_mode(n_t, k);
            for p in 0..nx {
                let cx = temporal_mode(nx, p);
                for s in 0..ny {
                    let cy = temporal_mode(ny, s);
                    let lambda = discrete_temporal_eigenvalue(a, h, n_t, k)
                        + 2.0 * r * discrete_temporal_eigenvalue(1.0, 1.0, nx, p)
                        + 2.0 * r * discrete_temporal_eigenvalue(1.0, 1.0, ny, s);
                    let x: Vec<f64> = (0..n_t * nx * ny)
                        .map(|idx| {
                            let (l, b) = (idx / (nx * ny), idx % (nx * ny));
                            ct[l] * cx[b % nx] * cy[b / nx]
                        })
                        .collect();
                    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!(residual(&inf.matrix, &x, lambda) <= 1e-12 * scale * norm);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn temporal_eigenvalues_decrease_with_a(a in 0.0f64..10.0, da in 0.0f64..5.0, k in 0usize..20) {
            prop_assert!(temporal_eigenvalue(a + da, 1.0, k) <= temporal_eigenvalue(a, 1.0, k));
            prop_assert!(discrete_temporal_eigenvalue(a + da, 0.05, 21, k) <= discrete_temporal_eigenvalue(a, 0.05, 21, k));
        }
    }
}
