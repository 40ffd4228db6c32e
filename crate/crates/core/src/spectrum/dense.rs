//! Full dense eigendecomposition, the oracle for small problems.

use faer::Mat;

use super::{normalise_vector, residual, spectral_order, EigenSolution, SolverMetadata, C64};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Every eigenpair of `matrix`, ordered and normalised as in
/// [`leading_eigenpairs`](super::leading_eigenpairs). Cubic in the dimension.
pub fn dense_spectrum(matrix: &CsrMatrix) -> Result<EigenSolution> {
    if !matrix.is_square() {
        return Err(Error::domain("dense eigensolve needs a square matrix"));
    }
    let n = matrix.nrows();
    let mut a = Mat::<f64>::zeros(n, n);
    for (i, j, v) in matrix.iter() {
        a[(i, j)] += v;
    }
    let eig = a
        .eigen()
        .map_err(|e| Error::Numerical(format!("dense eigensolve failed: {e:?}")))?;
    let s = eig.S();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| spectral_order(&s[i], &s[j]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for i in order {
        let lambda: C64 = s[i];
        let mut x: Vec<C64> = (0..n).map(|r| u[(r, i)]).collect();
        normalise_vector(&mut x, lambda.im == 0.0);
        residuals.push(residual(matrix, lambda, &x));
        values.push(lambda);
        vectors.push(x);
    }
    Ok(EigenSolution {
        values,
        vectors,
        residuals,
        metadata: SolverMetadata {
            method: "dense".to_string(),
            shift: 0.0,
            krylov_dim: n,
            restarts: 0,
            operator_applications: 0,
            frobenius_norm: matrix.frobenius_norm(),
            tol: 0.0,
            seed: 0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triangular_matrix_has_its_diagonal_as_spectrum() {
        let m = CsrMatrix::from_triplets(3, 3, [(0, 0, -3.0), (0, 1, 1.0), (1, 1, -1.0), (1, 2, 2.0), (2, 2, -2.0)]);
        let sol = dense_spectrum(&m).unwrap();
        let re: Vec<f64> = sol.values.iter().map(|z| z.re).collect();
        assert_abs_diff_eq!(re[0], -1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(re[1], -2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(re[2], -3.0, epsilon = 1e-13);
        assert!(sol.residuals.iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn rotation_block_gives_a_conjugate_pair() {
        let m = CsrMatrix::from_triplets(2, 2, [(0, 0, -1.0), (0, 1, 2.0), (1, 0, -2.0), (1, 1, -1.0)]);
        let sol = dense_spectrum(&m).unwrap();
        assert_abs_diff_eq!(sol.values[0].im, 2.0, epsilon = 1e-13);
        assert_eq!(sol.values[1], sol.values[0].conj());
    }
}
