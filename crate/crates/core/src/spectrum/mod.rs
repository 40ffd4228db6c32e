//! Leading eigenpairs of generators, their classification and the
//! almost-invariance diagnostics.
//!
//! Functions live on the right: eigenvectors of the assembled matrix are
//! the function-side ("adjoint") eigenvectors, and the constant vector is the
//! null vector on uniform grids. On nonuniform grids [`function_side`] gives
//! the similar matrix with that property. Density-side eigenvectors are right
//! eigenvectors of the transpose, see [`density_side`].

mod arnoldi;
mod classify;
mod dense;
mod diagnostics;

use std::cmp::Ordering;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub use self::arnoldi::leading_eigenpairs;
pub use self::classify::{
    classify, classify_vector, fibre_statistics, Classification, ClassifyOptions, EigenClass, FibreStatistics,
};
pub use self::dense::dense_spectrum;
pub use self::diagnostics::{almost_invariance_rate, density_side, function_side, theorem_balance, BalanceReport};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenOptions {
    /// Number of eigenpairs wanted.
    pub k: usize,
    /// Residual bound relative to the Frobenius norm of the matrix.
    pub tol: f64,
    /// Seed of the Krylov start vector.
    pub seed: u64,
    /// Real shift of the inverted operator; `None` picks a small positive
    /// value from the diagonal scale.
    pub shift: Option<f64>,
    /// Largest Krylov basis before an explicit restart; `None` uses the full
    /// dimension for small matrices.
    pub max_krylov: Option<usize>,
    pub max_restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            k: 10,
            tol: 1e-10,
            seed: 42,
            shift: None,
            max_krylov: None,
            max_restarts: 40,
        }
    }
}

impl EigenOptions {
    pub fn with_k(k: usize) -> Self {
        EigenOptions {
            k,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMetadata {
    pub method: String,
    pub shift: f64,
    pub krylov_dim: usize,
    pub restarts: usize,
    pub operator_applications: usize,
    pub frobenius_norm: f64,
    pub tol: f64,
    pub seed: u64,
}

/// Eigenpairs in decreasing order of real part.
///
/// Each vector is scaled so that its entry of largest modulus equals `1`;
/// vectors of real eigenvalues are real. `residuals[i]` is
/// `‖A x − λ x‖₂ / ‖x‖₂`.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub values: Vec<C64>,
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    pub metadata: SolverMetadata,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_real(&self, i: usize) -> bool {
        self.values[i].im == 0.0
    }

    /// Real part of eigenvector `i`; `None` for complex eigenvalues.
    pub fn real_vector(&self, i: usize) -> Option<Vec<f64>> {
        self.is_real(i)
            .then(|| self.vectors[i].iter().map(|z| z.re).collect())
    }

    /// Largest residual relative to `‖A‖_F`.
    pub fn worst_relative_residual(&self) -> f64 {
        let scale = self.metadata.frobenius_norm.max(f64::MIN_POSITIVE);
        self.residuals.iter().fold(0.0, |a, &r| a.max(r / scale))
    }
}

/// Decreasing real part, then increasing `|im|`, then positive imaginary part
/// first so that conjugate pairs sit together.
pub fn spectral_order(a: &C64, b: &C64) -> Ordering {
    b.re.total_cmp(&a.re)
        .then(a.im.abs().total_cmp(&b.im.abs()))
        .then(b.im.total_cmp(&a.im))
}

/// Rescales `x` so that its entry of largest modulus is `1`; drops the
/// imaginary part when `real` is set.
pub(crate) fn normalise_vector(x: &mut [C64], real: bool) {
    let Some(pivot) = x
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
    else {
        return;
    };
    if pivot.norm_sqr() == 0.0 {
        return;
    }
    let scale = pivot.inv();
    for z in x.iter_mut() {
        *z *= scale;
        if real {
            z.im = 0.0;
        }
    }
}

/// `‖A x − λ x‖₂ / ‖x‖₂` for a complex pair of a real sparse matrix.
pub fn residual(matrix: &CsrMatrix, lambda: C64, x: &[C64]) -> f64 {
    let re: Vec<f64> = x.iter().map(|z| z.re).collect();
    let im: Vec<f64> = x.iter().map(|z| z.im).collect();
    let ar = matrix.mul_vec(&re);
    let ai = matrix.mul_vec(&im);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        let lx = lambda * x[i];
        num += (ar[i] - lx.re).powi(2) + (ai[i] - lx.im).powi(2);
        den += x[i].norm_sqr();
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Writes `index,re,im,class,residual` with 1-based indices.
pub fn write_spectrum_csv(path: &Path, solution: &EigenSolution, classes: &[Classification]) -> Result<()> {
    if classes.len() != solution.len() {
        return Err(Error::domain(format!(
            "{} classifications for {} eigenpairs",
            classes.len(),
            solution.len()
        )));
    }
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["index", "re", "im", "class", "residual"])
        .map_err(csv_err)?;
    for (i, ((z, r), c)) in solution
        .values
        .iter()
        .zip(&solution.residuals)
        .zip(classes)
        .enumerate()
    {
        w.write_record([
            (i + 1).to_string(),
            format!("{:e}", z.re),
            format!("{:e}", z.im),
            c.class.to_string(),
            format!("{r:e}"),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_groups_conjugate_pairs() {
        let mut v = vec![
            C64::new(-1.0, -2.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(-1.0, 2.0),
            C64::new(-0.5, 0.0),
        ];
        v.sort_by(spectral_order);
        assert_eq!(
            v,
            vec![
                C64::new(0.0, 0.0),
                C64::new(-0.5, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(-1.0, 2.0),
                C64::new(-1.0, -2.0),
            ]
        );
    }

    #[test]
    fn normalisation_pins_the_largest_entry() {
        let mut x = vec![C64::new(0.0, 2.0), C64::new(0.0, -1.0)];
        normalise_vector(&mut x, false);
        assert_eq!(x, vec![C64::new(1.0, 0.0), C64::new(-0.5, 0.0)]);
    }
}
