//! Almost-invariance rates and the sign-split eigenvalue balance.
//!
//! For a box set `A` and a density row vector `g`, the discrete functional
//! `G_A g = Σ_{i∈A} m_i (gG)_i` is the instantaneous rate of change of the
//! mass of `g` inside `A`.

use serde::{Deserialize, Serialize};

use super::C64;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// The matrix whose right eigenvectors are the density-side eigenvectors.
pub fn density_side(matrix: &CsrMatrix) -> CsrMatrix {
    matrix.transpose()
}

/// `M⁻¹ A M` with `M` the box measures repeated over every fibre.
///
/// A mass-conserving generator satisfies `A m = 0`, so on nonuniform grids
/// its right eigenvectors are measure-weighted functions `m·f`. The similarity
/// has zero row sums and right eigenvectors `f`, the same spectrum, and is
/// returned unchanged (bit for bit) when all measures are equal.
pub fn function_side(matrix: &CsrMatrix, measures: &[f64]) -> Result<CsrMatrix> {
    let n = measures.len();
    if n == 0 || !matrix.nrows().is_multiple_of(n) || !matrix.is_square() {
        return Err(Error::domain(format!(
            "{} measures do not tile a {}x{} matrix",
            n,
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if measures.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::domain("box measures must be positive"));
    }
    if measures.iter().all(|&m| m == measures[0]) {
        return Ok(matrix.clone());
    }
    let triplets = matrix
        .iter()
        .map(|(i, j, v)| (i, j, if i == j { v } else { v * measures[j % n] / measures[i % n] }));
    Ok(CsrMatrix::from_triplets(matrix.nrows(), matrix.ncols(), triplets))
}

fn restricted_rate(matrix: &CsrMatrix, g: &[f64], set: &[bool], measures: &[f64]) -> f64 {
    matrix
        .left_mul_vec(g)
        .iter()
        .zip(set)
        .zip(measures)
        .filter(|((_, &inside), _)| inside)
        .map(|((r, _), m)| m * r)
        .sum()
}

/// `G_A 1_A / m(A)`: first-order loss rate of mass from `A`, never positive
/// for a generator. Residence over a short time `s` is about `1 + rate·s`.
pub fn almost_invariance_rate(matrix: &CsrMatrix, set: &[usize], measures: &[f64]) -> Result<f64> {
    let n = matrix.nrows();
    if set.is_empty() {
        return Err(Error::domain("almost-invariance rate of an empty set"));
    }
    if measures.len() != n {
        return Err(Error::domain(format!("{} measures for {n} boxes", measures.len())));
    }
    let mut inside = vec![false; n];
    for &i in set {
        if i >= n {
            return Err(Error::domain(format!("box {i} out of range for {n} boxes")));
        }
        inside[i] = true;
    }
    let indicator: Vec<f64> = inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mass: f64 = set.iter().map(|&i| measures[i]).sum();
    Ok(restricted_rate(matrix, &indicator, &inside, measures) / mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// `|G_{A+}(f1_{A+})/ν(A+) + G_{A-}(f1_{A-})/ν(A-) − λ| / |λ|`.
    pub residual: f64,
    /// `|Σ m_i f_i|` after scaling to `Σ m_i |f_i| = 1`.
    pub mean_defect: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub term_plus: f64,
    pub term_minus: f64,
}

/// Checks that the two sign-restricted rates of a density-side eigenvector
/// `f` (so `fG = λf`) add up to `λ`.
pub fn theorem_balance(matrix: &CsrMatrix, value: C64, f: &[f64], measures: &[f64]) -> Result<BalanceReport> {
    if value.im != 0.0 || !(value.re < 0.0) {
        return Err(Error::domain(format!("balance needs a real negative eigenvalue (got {value})")));
    }
    let n = matrix.nrows();
    if f.len() != n || measures.len() != n {
        return Err(Error::domain("eigenvector and measures must match the matrix"));
    }
    let l1: f64 = f.iter().zip(measures).map(|(f, m)| m * f.abs()).sum();
    if l1 == 0.0 {
        return Err(Error::domain("zero eigenvector"));
    }
    let f: Vec<f64> = f.iter().map(|x| x / l1).collect();
    let mean_defect = f.iter().zip(measures).map(|(f, m)| m * f).sum::<f64>().abs();

    let positive: Vec<bool> = f.iter().map(|&x| x >= 0.0).collect();
    let negative: Vec<bool> = positive.iter().map(|p| !p).collect();
    let part = |set: &[bool]| -> (f64, f64) {
        let g: Vec<f64> = f.iter().zip(set).map(|(&x, &s)| if s { x } else { 0.0 }).collect();
        let nu: f64 = g.iter().zip(measures).map(|(g, m)| g * m).sum();
        (nu, restricted_rate(matrix, &g, set, measures) / nu)
    };
    let (nu_plus, term_plus) = part(&positive);
    let (nu_minus, term_minus) = part(&negative);
    let lambda = value.re;
    Ok(BalanceReport {
        residual: (term_plus + term_minus - lambda).abs() / lambda.abs(),
        mean_defect,
        nu_plus,
        nu_minus,
        term_plus,
        term_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::ulam_generator;
    use crate::grid::{Grid, GridSpec};
    use crate::quadrature::QuadratureOptions;
    use crate::spectrum::{leading_eigenpairs, EigenOptions};
    use crate::velocity::SwitchingDoubleGyre;
    use approx::assert_abs_diff_eq;

    fn two_box(r: f64) -> CsrMatrix {
        CsrMatrix::from_triplets(2, 2, [(0, 0, -r), (0, 1, r), (1, 0, r), (1, 1, -r)])
    }

    #[test]
    fn two_box_rates() {
        let r = 0.4;
        let g = two_box(r);
        assert_abs_diff_eq!(almost_invariance_rate(&g, &[0], &[1.0, 1.0]).unwrap(), -r, epsilon = 1e-15);
        assert_abs_diff_eq!(almost_invariance_rate(&g, &[0, 1], &[1.0, 1.0]).unwrap(), 0.0, epsilon = 1e-15);
        assert!(almost_invariance_rate(&g, &[], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn two_box_balance_is_exact() {
        let r = 0.4;
        let rep = theorem_balance(&two_box(r), C64::new(-2.0 * r, 0.0), &[1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(rep.residual, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.nu_plus, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.nu_minus, -0.5, epsilon = 1e-15);
        assert_eq!(rep.mean_defect, 0.0);
    }

    #[test]
    fn balance_rejects_nonnegative_or_complex_values() {
        let g = two_box(1.0);
        assert!(theorem_balance(&g, C64::new(0.0, 0.0), &[1.0, -1.0], &[1.0, 1.0]).is_err());
        assert!(theorem_balance(&g, C64::new(-1.0, 0.5), &[1.0, -1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn gyre_is_more_invariant_than_a_cut_through_it() {
        let grid = Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), 30, 20)).unwrap();
        let g = ulam_generator(&grid, &SwitchingDoubleGyre::benchmark(), 0.0, 0.24, &QuadratureOptions::tight())
            .unwrap()
            .matrix;
        let m = grid.measures();
        let select = |pred: &dyn Fn([f64; 2]) -> bool| -> Vec<usize> {
            grid.centres().enumerate().filter(|(_, c)| pred(*c)).map(|(i, _)| i).collect()
        };
        let gyre = almost_invariance_rate(&g, &select(&|c| c[0] < 1.0), &m).unwrap();
        let cut = almost_invariance_rate(&g, &select(&|c| c[0] < 0.5), &m).unwrap();
        assert!(gyre <= 0.0 && cut <= 0.0);
        assert!(gyre.abs() < cut.abs(), "gyre {gyre} vs cut {cut}");
    }

    #[test]
    fn function_side_has_constant_null_vector_on_the_sphere() {
        let grid = Grid::new(GridSpec::spherical((0.0, 20.0), (40.0, 70.0), 6, 8, crate::grid::EARTH_RADIUS_M)).unwrap();
        let field = crate::velocity::ConstantField::new(5.0, 2.0);
        let g = ulam_generator(&grid, &field, 0.0, 300.0, &QuadratureOptions::tight()).unwrap().matrix;
        let m = grid.measures();
        let scale = g.max_abs();
        assert!(g.row_sums().iter().any(|r| r.abs() > 1e-6 * scale));
        let f = function_side(&g, &m).unwrap();
        assert!(f.row_sums().iter().all(|r| r.abs() <= 1e-12 * scale));
        let x: Vec<f64> = (0..m.len()).map(|i| (i as f64).sin()).collect();
        let mx: Vec<f64> = x.iter().zip(&m).map(|(x, m)| x * m).collect();
        // M⁻¹ A M x == M⁻¹ (A (M x))
        for ((a, b), m) in f.mul_vec(&x).iter().zip(g.mul_vec(&mx)).zip(&m) {
            assert_abs_diff_eq!(*a, b / m, epsilon = 1e-12 * scale);
        }
        let uniform = ulam_generator(&Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), 3, 2)).unwrap(), &field, 0.0, 0.1, &QuadratureOptions::tight())
            .unwrap()
            .matrix;
        assert_eq!(function_side(&uniform, &[1.0; 6]).unwrap().to_dense(), uniform.to_dense());
        assert!(function_side(&uniform, &[1.0; 4]).is_err());
    }

    #[test]
    fn balance_and_mean_zero_on_the_frozen_gyre() {
        let grid = Grid::new(GridSpec::planar((0.0, 3.0), (0.0, 2.0), 30, 20)).unwrap();
        let g = ulam_generator(&grid, &SwitchingDoubleGyre::benchmark(), 0.0, 0.24, &QuadratureOptions::tight())
            .unwrap()
            .matrix;
        let sol = leading_eigenpairs(&density_side(&g), &EigenOptions::with_k(4)).unwrap();
        let i = (1..sol.len()).find(|&i| sol.is_real(i)).unwrap();
        let f = sol.real_vector(i).unwrap();
        let rep = theorem_balance(&g, sol.values[i], &f, &grid.measures()).unwrap();
        assert!(rep.residual < 1e-8, "{rep:?}");
        assert!(rep.mean_defect < 1e-10, "{rep:?}");
    }
}
