//! Ulam discretisation of the transport generator on a box grid.
//!
//! For boxes `i ≠ j` sharing a face,
//!
//! ```text
//! G_ij = (1/m(B_j)) ∫_{B_i∩B_j} max{v·n_ij, 0} dm₁ + ε²/(2ℓ_i²)
//! G_ii = -Σ_{j≠i} (m(B_j)/m(B_i)) G_ij
//! ```
//!
//! where `ℓ_i` is the side of `B_i` along the face normal. With equal box
//! areas the diagonal is the negated off-diagonal row sum. A row vector of
//! densities `g` evolves by `ġ = gG`; faces on the domain boundary carry no
//! flux (reflecting boundary).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid, GridSpec};
use crate::quadrature::{AdaptiveGauss, QuadratureOptions};
use crate::sparse::CsrMatrix;
use crate::velocity::{time_average, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceLabel {
    Time(f64),
    Averaged,
}

/// Sparse `N×N` generator for one frozen-time slice (or the averaged field).
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    pub matrix: CsrMatrix,
    pub label: SliceLabel,
    pub epsilon: f64,
    pub grid: GridSpec,
}

impl GeneratorMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest violation of the mass-conservation identity
    /// `m_i G_ii + Σ_{j≠i} m_j G_ij = 0`, relative to `max_i m_i · max|G|`.
    pub fn conservation_defect(&self, measures: &[f64]) -> f64 {
        let scale = self.matrix.max_abs() * measures.iter().fold(0.0f64, |a, &m| a.max(m));
        if scale == 0.0 {
            return 0.0;
        }
        (0..self.n())
            .map(|i| {
                self.matrix
                    .row(i)
                    .map(|(j, v)| measures[j] * v)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
            / scale
    }
}

/// Assembles the generator of `field` frozen at time `t`.
pub fn ulam_generator<F: VelocityField + ?Sized>(
    grid: &Grid,
    field: &F,
    t: f64,
    epsilon: f64,
    quad: &QuadratureOptions,
) -> Result<GeneratorMatrix> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("epsilon must be finite and >= 0 (got {epsilon})")));
    }
    // surfaces time-domain errors before any face is integrated
    field.eval(t, grid.cell(0).centre)?;

    let rule = AdaptiveGauss::new(*quad);
    let eps_half = 0.5 * epsilon * epsilon;
    let n = grid.len();
    let mut trip = Vec::with_capacity(grid.faces().len() + n);
    let mut diag = vec![0.0; n];
    let mut eval_err = None;

    for (face_id, face) in grid.faces().iter().enumerate() {
        let (a, b) = face.span;
        let per_unit = face.measure / (b - a);
        let sign = face.sign as f64;
        let integrand = |s: f64| {
            let p = match face.axis {
                Axis::X => [face.position, s],
                Axis::Y => [s, face.position],
            };
            match field.eval(t, p) {
                Ok(v) => {
                    let normal = match face.axis {
                        Axis::X => v[0],
                        Axis::Y => v[1],
                    };
                    (sign * normal).max(0.0)
                }
                Err(e) => {
                    eval_err.get_or_insert(e);
                    0.0
                }
            }
        };
        let outflow = rule.integrate(integrand, a, b).ok_or(Error::Quadrature {
            face: face_id,
            from: face.from,
            to: face.to,
            depth: quad.max_depth,
        })? * per_unit;
        if let Some(e) = eval_err.take() {
            return Err(e);
        }

        let from = grid.cell(face.from);
        let to = grid.cell(face.to);
        let side = match face.axis {
            Axis::X => from.side_x,
            Axis::Y => from.side_y,
        };
        let rate = outflow / to.area + eps_half / (side * side);
        trip.push((face.from, face.to, rate));
        diag[face.from] -= if to.area == from.area {
            rate
        } else {
            to.area / from.area * rate
        };
    }
    trip.extend(diag.into_iter().enumerate().map(|(i, d)| (i, i, d)));

    Ok(GeneratorMatrix {
        matrix: CsrMatrix::from_triplets(n, n, trip),
        label: SliceLabel::Time(t),
        epsilon,
        grid: *grid.spec(),
    })
}

/// Generator of the trapezoidal time-averaged field over `times`.
///
/// The velocity is averaged before assembly; averaging the slice matrices
/// would give a different operator because the upwind flux is nonlinear in v.
pub fn averaged_generator<F: VelocityField + ?Sized>(
    grid: &Grid,
    field: &F,
    times: &[f64],
    epsilon: f64,
    quad: &QuadratureOptions,
) -> Result<GeneratorMatrix> {
    let avg = time_average(field, times)?;
    let mut g = ulam_generator(grid, &avg, times[0], epsilon, quad)?;
    g.label = SliceLabel::Averaged;
    Ok(g)
}

/// One generator per time node, assembled in parallel.
pub fn slice_generators<F: VelocityField + ?Sized>(
    grid: &Grid,
    field: &F,
    times: &[f64],
    epsilon: f64,
    quad: &QuadratureOptions,
) -> Result<Vec<GeneratorMatrix>> {
    times
        .par_iter()
        .map(|&t| ulam_generator(grid, field, t, epsilon, quad))
        .collect()
}
