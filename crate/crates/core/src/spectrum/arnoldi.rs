//! Shift-invert Arnoldi for the eigenvalues of largest real part.
//!
//! The Krylov space of `T = (A − sI)⁻¹` is built with twice-applied classical
//! Gram–Schmidt. Ritz values `θ` map back to `λ = s + 1/θ`; every candidate
//! pair is accepted only on its true residual against `A`. The basis grows
//! until the wanted pairs converge or the size limit is hit.
//!
//! Converged vectors are locked at the front of the basis and every restart
//! continues in their orthogonal complement, with Rayleigh–Ritz over locked
//! and fresh columns together. A single Krylov sequence sees one copy of each
//! repeated eigenvalue, so a converged set is only returned once a further
//! cycle from a fresh random start leaves it unchanged.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::{ColMut, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{normalise_vector, residual, spectral_order, EigenOptions, EigenSolution, SolverMetadata, C64};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Row block for the parallel basis updates.
const CHUNK: usize = 4096;
/// Matrices up to this size use the full dimension as the Krylov limit.
const FULL_KRYLOV_LIMIT: usize = 600;
/// Probe shift as a fraction of the largest diagonal entry. Strong temporal
/// coupling can dominate the diagonal, so the probe sits near the origin.
const PROBE_FRACTION: f64 = 1e-6;
/// Default shift as a fraction of the largest wanted eigenvalue modulus:
/// wanted Ritz values stay apart, and values far from the shift lose at most
/// about three digits to the amplified ones near it.
const SHIFT_FRACTION: f64 = 1e-3;
/// Floor of the default shift relative to the largest diagonal entry.
const SHIFT_FLOOR: f64 = 1e-8;
/// Relative norm below which a vector is taken to lie in the current span.
const SPAN_DROP: f64 = 1e-8;

struct Krylov<'a> {
    n: usize,
    lu: &'a Lu<usize, f64>,
    /// Column-major `n × cols` orthonormal basis; the first `locked` columns
    /// span converged invariant subspaces of `T`.
    basis: Vec<f64>,
    locked: usize,
    /// `T` applied to each locked column, column-major.
    locked_images: Vec<f64>,
    /// `h[j]` holds the coefficients of `T v_{locked + j}` over the basis
    /// (length `locked + j + 2`).
    h: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
    applications: usize,
}

impl<'a> Krylov<'a> {
    fn new(n: usize, lu: &'a Lu<usize, f64>, capacity: usize, seed: u64) -> Self {
        Krylov {
            n,
            lu,
            basis: Vec::with_capacity(n * (capacity + 1).min(n)),
            locked: 0,
            locked_images: Vec::new(),
            h: Vec::with_capacity(capacity),
            rng: ChaCha8Rng::seed_from_u64(seed),
            applications: 0,
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.basis[j * self.n..(j + 1) * self.n]
    }

    /// Columns that already carry their image under `T`.
    fn dim(&self) -> usize {
        self.locked + self.h.len()
    }

    fn apply(&mut self, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        self.lu.solve_in_place(ColMut::from_slice_mut(&mut w));
        self.applications += 1;
        w
    }

    fn random_vector(&mut self) -> Vec<f64> {
        (0..self.n).map(|_| self.rng.random::<f64>() - 0.5).collect()
    }

    /// Subtracts the projection onto the first `count` basis vectors twice and
    /// returns the accumulated coefficients.
    fn orthogonalise(&self, w: &mut [f64], count: usize) -> Vec<f64> {
        let n = self.n;
        let mut coeffs = vec![0.0; count];
        for _ in 0..2 {
            let c: Vec<f64> = (0..count)
                .into_par_iter()
                .map(|i| dot(self.col(i), w))
                .collect();
            w.par_chunks_mut(CHUNK).enumerate().for_each(|(b, wc)| {
                let off = b * CHUNK;
                for (i, ci) in c.iter().enumerate() {
                    let v = &self.basis[i * n + off..i * n + off + wc.len()];
                    wc.iter_mut().zip(v).for_each(|(w, v)| *w -= ci * v);
                }
            });
            coeffs.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        }
        coeffs
    }

    /// Appends `v` orthonormalised against the basis, or a random direction
    /// when `v` lies in the current span.
    fn push_direction(&mut self, mut v: Vec<f64>) {
        let cols = self.basis.len() / self.n;
        let before = norm2(&v);
        self.orthogonalise(&mut v, cols);
        let mut norm = norm2(&v);
        while !(norm > SPAN_DROP * before && norm > 0.0) {
            v = self.random_vector();
            self.orthogonalise(&mut v, cols);
            norm = norm2(&v);
        }
        v.iter_mut().for_each(|x| *x /= norm);
        self.basis.extend_from_slice(&v);
    }

    /// Restarts with `vectors` locked (orthonormalised, dependent ones
    /// dropped) and `start` as the first fresh direction.
    fn restart(&mut self, vectors: &[Vec<f64>], start: Vec<f64>) {
        self.basis.clear();
        self.h.clear();
        self.locked = 0;
        for v in vectors {
            if self.locked + 1 >= self.n {
                break;
            }
            let mut w = v.clone();
            let before = norm2(&w);
            self.orthogonalise(&mut w, self.locked);
            let norm = norm2(&w);
            if norm > 1e-6 * before && norm > 0.0 {
                w.iter_mut().for_each(|x| *x /= norm);
                self.basis.extend_from_slice(&w);
                self.locked += 1;
            }
        }
        self.locked_images = (0..self.locked)
            .flat_map(|j| self.apply(&self.col(j).to_vec()))
            .collect();
        self.push_direction(start);
    }

    /// Extends the factorisation to `m` columns.
    fn extend(&mut self, m: usize) {
        while self.dim() < m {
            let j = self.dim();
            let mut w = self.apply(&self.col(j).to_vec());
            let before = norm2(&w);
            let mut hj = self.orthogonalise(&mut w, j + 1);
            if j + 1 == self.n {
                hj.push(0.0);
                self.h.push(hj);
                break;
            }
            let beta = norm2(&w);
            if beta <= 1e-12 * before || beta == 0.0 {
                // invariant subspace: continue with a fresh orthogonal direction
                hj.push(0.0);
                self.h.push(hj);
                let fresh = self.random_vector();
                self.push_direction(fresh);
            } else {
                hj.push(beta);
                w.iter_mut().for_each(|x| *x /= beta);
                self.basis.extend_from_slice(&w);
                self.h.push(hj);
            }
        }
    }

    /// Ritz pairs of `T` over the first `dim` columns as `(θ, y)`.
    fn ritz(&self) -> Result<Vec<(C64, Vec<C64>)>> {
        let m = self.dim();
        let p = self.locked;
        let n = self.n;
        let locked_block: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|c| {
                let image = &self.locked_images[c * n..(c + 1) * n];
                (0..m).map(|r| dot(self.col(r), image)).collect()
            })
            .collect();
        let hm = Mat::from_fn(m, m, |i, j| {
            if j < p {
                locked_block[j][i]
            } else {
                self.h[j - p].get(i).copied().unwrap_or(0.0)
            }
        });
        let eig = hm
            .eigen()
            .map_err(|e| Error::Numerical(format!("projected eigensolve failed: {e:?}")))?;
        let s = eig.S();
        let u = eig.U();
        Ok((0..m)
            .map(|i| {
                let theta = s[i];
                (theta, (0..m).map(|r| u[(r, i)]).collect())
            })
            .collect())
    }

    /// `V y` for a complex coefficient vector.
    fn lift(&self, y: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x = vec![C64::new(0.0, 0.0); n];
        x.par_chunks_mut(CHUNK).enumerate().for_each(|(b, xc)| {
            let off = b * CHUNK;
            for (j, yj) in y.iter().enumerate() {
                let v = &self.basis[j * n + off..j * n + off + xc.len()];
                xc.iter_mut().zip(v).for_each(|(x, v)| *x += yj * v);
            }
        });
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn factor(matrix: &CsrMatrix, shift: f64) -> Result<Lu<usize, f64>> {
    matrix
        .to_faer_shifted(shift)?
        .sp_lu()
        .map_err(|e| Error::Numerical(format!("LU of A - {shift}I failed: {e:?}")))
}

/// The `k` Ritz pairs of largest real part, mapped back to `λ = s + 1/θ`.
fn wanted(ritz: Vec<(C64, Vec<C64>)>, shift: f64, k: usize) -> Vec<(C64, Vec<C64>)> {
    let theta_max = ritz.iter().fold(0.0f64, |a, (t, _)| a.max(t.norm()));
    // θ at round-off level would map to spurious λ of huge modulus
    let mut pairs: Vec<(C64, Vec<C64>)> = ritz
        .into_iter()
        .filter(|(theta, _)| theta.norm() > 1e-13 * theta_max)
        .map(|(theta, y)| (C64::new(shift, 0.0) + theta.inv(), y))
        .collect();
    pairs.sort_by(|a, b| spectral_order(&a.0, &b.0));
    pairs.truncate(k);
    pairs
}

/// Picks a shift from a short Krylov probe near the origin, scaled to the
/// modulus of the wanted eigenvalues.
fn default_shift(matrix: &CsrMatrix, k: usize, m: usize, seed: u64) -> Result<f64> {
    let d = matrix.diagonal().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if d == 0.0 {
        return Ok(1.0);
    }
    let probe = PROBE_FRACTION * d;
    let lu = factor(matrix, probe)?;
    let mut kry = Krylov::new(matrix.nrows(), &lu, m, seed);
    let start = kry.random_vector();
    kry.restart(&[], start);
    kry.extend(m);
    let reach = wanted(kry.ritz()?, probe, k)
        .iter()
        .fold(0.0f64, |a, (l, _)| a.max(l.norm()));
    Ok((SHIFT_FRACTION * reach).max(SHIFT_FLOOR * d))
}

/// Whether two ordered value lists agree to within the residual scale.
fn same_values(a: &[C64], b: &[C64], threshold: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).norm() <= threshold.max(1e-9 * x.norm().max(1.0)))
}

/// The `k` eigenpairs of largest real part of a square sparse matrix.
///
/// Intended for generators, whose spectra lie in the closed left half-plane;
/// the default shift is positive so that `A − sI` is nonsingular.
pub fn leading_eigenpairs(matrix: &CsrMatrix, opts: &EigenOptions) -> Result<EigenSolution> {
    if !matrix.is_square() {
        return Err(Error::domain(format!(
            "eigenproblem needs a square matrix (got {}x{})",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let n = matrix.nrows();
    let k = opts.k;
    if k == 0 || k > n {
        return Err(Error::domain(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    let m_max = opts
        .max_krylov
        .unwrap_or(if n <= FULL_KRYLOV_LIMIT { n } else { (8 * k).max(120) })
        .clamp(k.min(n), n)
        .max(1);
    let m_start = (2 * k + 10).max(30).min(m_max);

    let shift = match opts.shift {
        Some(s) => s,
        None => default_shift(matrix, k, m_start, opts.seed)?,
    };
    if !shift.is_finite() {
        return Err(Error::domain("eigensolver shift must be finite"));
    }
    let fro = matrix.frobenius_norm();
    let threshold = opts.tol * if fro > 0.0 { fro } else { 1.0 };
    let lu = factor(matrix, shift)?;
    let mut kry = Krylov::new(n, &lu, m_max, opts.seed);
    let start = kry.random_vector();
    kry.restart(&[], start);

    let mut restarts = 0;
    let mut m = m_start;
    // values of the last fully converged set, awaiting confirmation
    let mut pending: Option<Vec<C64>> = None;
    loop {
        // locked columns do not count against the growth budget
        let limit = (m_max + kry.locked).min(n);
        kry.extend(m.min(limit));
        let pairs = wanted(kry.ritz()?, shift, k);

        let lifted: Vec<(C64, Vec<C64>, f64)> = pairs
            .into_iter()
            .map(|(lambda, y)| {
                let x = kry.lift(&y);
                let r = residual(matrix, lambda, &x);
                (lambda, x, r)
            })
            .collect();
        let converged = lifted.iter().filter(|(_, _, r)| *r <= threshold).count();
        let krylov_dim = kry.dim();
        let complete = converged == k && lifted.len() == k;

        if complete {
            let values: Vec<C64> = lifted.iter().map(|(l, _, _)| *l).collect();
            let confirmed = pending.as_ref().is_some_and(|p| same_values(p, &values, threshold));
            if confirmed || krylov_dim == n {
                return Ok(finish(matrix, lifted, shift, krylov_dim, restarts, kry.applications, fro, opts));
            }
            pending = Some(values);
        } else if krylov_dim < limit {
            m = (2 * krylov_dim).min(limit);
            continue;
        }
        if restarts >= opts.max_restarts {
            let worst = lifted.iter().fold(0.0f64, |a, (_, _, r)| a.max(*r));
            return Err(Error::Eigen {
                wanted: k,
                converged,
                worst_residual: worst / if fro > 0.0 { fro } else { 1.0 },
            });
        }
        restarts += 1;

        let mut lock = Vec::new();
        let mut start = vec![0.0; n];
        for (lambda, x, r) in &lifted {
            if *r <= threshold {
                lock.push(x.iter().map(|z| z.re).collect::<Vec<f64>>());
                if lambda.im != 0.0 {
                    lock.push(x.iter().map(|z| z.im).collect());
                }
            } else {
                let scale = x.iter().fold(0.0f64, |a, z| a.max(z.norm()));
                for (s, z) in start.iter_mut().zip(x) {
                    *s += (z.re + z.im) / scale;
                }
            }
        }
        if complete || norm2(&start) == 0.0 {
            start = kry.random_vector();
        }
        kry.restart(&lock, start);
        m = kry.locked + m_start;
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    matrix: &CsrMatrix,
    pairs: Vec<(C64, Vec<C64>, f64)>,
    shift: f64,
    krylov_dim: usize,
    restarts: usize,
    applications: usize,
    fro: f64,
    opts: &EigenOptions,
) -> EigenSolution {
    let mut values = Vec::with_capacity(pairs.len());
    let mut vectors = Vec::with_capacity(pairs.len());
    let mut residuals = Vec::with_capacity(pairs.len());
    for (lambda, mut x, _) in pairs {
        let real = lambda.im == 0.0;
        normalise_vector(&mut x, real);
        residuals.push(residual(matrix, lambda, &x));
        values.push(lambda);
        vectors.push(x);
    }
    EigenSolution {
        values,
        vectors,
        residuals,
        metadata: SolverMetadata {
            method: "shift-invert arnoldi".to_string(),
            shift,
            krylov_dim,
            restarts,
            operator_applications: applications,
            frobenius_norm: fro,
            tol: opts.tol,
            seed: opts.seed,
        },
    }
}
