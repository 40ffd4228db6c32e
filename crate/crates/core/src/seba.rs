//! Sparse eigenbasis approximation.
//!
//! Given `r` orthonormal vectors `V` (`p × r`), alternates
//!
//! ```text
//! S ← soft_μ(V Rᵀ), columns scaled to unit 2-norm
//! R ← polar factor of SᵀV
//! ```
//!
//! until `R` settles. The columns of `S` span nearly the same space as `V`
//! but are sparse, so their supports isolate individual features.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SebaInit {
    /// Orthogonal factor of a seeded Gaussian matrix.
    Random { seed: u64 },
    Identity,
}

impl Default for SebaInit {
    fn default() -> Self {
        SebaInit::Random { seed: 42 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SebaOptions {
    /// Soft threshold; `None` means `0.99/√p`.
    pub mu: Option<f64>,
    /// Stopping bound on `‖R_new − R‖_F`.
    pub tol: f64,
    pub max_iter: usize,
    pub init: SebaInit,
}

impl Default for SebaOptions {
    fn default() -> Self {
        SebaOptions {
            mu: None,
            tol: 1e-12,
            max_iter: 5000,
            init: SebaInit::default(),
        }
    }
}

/// Sparse basis; every nonzero column has maximum exactly `1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SebaBasis {
    pub columns: Vec<Vec<f64>>,
    pub maxima: Vec<f64>,
    pub minima: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final rotation, row-major `r × r`.
    pub rotation: Vec<Vec<f64>>,
    pub mu: f64,
}

impl SebaBasis {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

fn to_mat(columns: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(columns[0].len(), columns.len(), |i, j| columns[j][i])
}

fn from_mat(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)]).collect())
        .collect()
}

fn gram_defect(v: &Mat<f64>) -> f64 {
    let g = v.transpose() * v;
    let mut d = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            d = d.max((g[(i, j)] - target).abs());
        }
    }
    d
}

/// Orthonormal basis of the column span; errors on rank deficiency.
fn orthonormalise(v: &Mat<f64>) -> Result<Mat<f64>> {
    let qr = v.qr();
    let r = qr.thin_R();
    let diag: Vec<f64> = (0..r.ncols()).map(|i| r[(i, i)].abs()).collect();
    let largest = diag.iter().fold(0.0f64, |a, &b| a.max(b));
    if largest == 0.0 || diag.iter().any(|&d| d <= 1e-10 * largest) {
        return Err(Error::domain("input vectors are linearly dependent"));
    }
    Ok(qr.compute_thin_Q())
}

/// Orthogonal polar factor `U Wᵀ` of `M = U Σ Wᵀ`.
fn polar(m: &Mat<f64>) -> Result<Mat<f64>> {
    let svd = m
        .svd()
        .map_err(|e| Error::Numerical(format!("SVD in polar step failed: {e:?}")))?;
    Ok(svd.U() * svd.V().transpose())
}

/// Rotates `vectors` (columns of length `p`) into a sparse basis.
pub fn seba(vectors: &[Vec<f64>], opts: &SebaOptions) -> Result<SebaBasis> {
    let r = vectors.len();
    if r == 0 {
        return Err(Error::domain("SEBA needs at least one vector"));
    }
    let p = vectors[0].len();
    if p < r || vectors.iter().any(|v| v.len() != p) {
        return Err(Error::domain(format!("SEBA needs {r} vectors of a common length >= {r}")));
    }
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::domain("SEBA input contains non-finite entries"));
    }
    let mu = opts.mu.unwrap_or(0.99 / (p as f64).sqrt());
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::domain(format!("SEBA threshold must lie in (0, 1) (got {mu})")));
    }

    let mut v = to_mat(vectors);
    let mut r_new = match opts.init {
        SebaInit::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Mat::from_fn(r, r, |_, _| StandardNormal.sample(&mut rng));
            orthonormalise(&g)?
        }
        SebaInit::Identity => {
            // break the symmetry of exactly constant columns
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for j in 0..r {
                let col = v.col(j);
                let first = col[0];
                if (0..p).all(|i| (col[i] - first).abs() <= 1e-12 * first.abs().max(1.0)) {
                    for i in 0..p {
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        v[(i, j)] += 1e-12 * noise;
                    }
                }
            }
            Mat::identity(r, r)
        }
    };
    if gram_defect(&v) > 1e-8 {
        v = orthonormalise(&v)?;
    }

    let mut s = Mat::<f64>::zeros(p, r);
    let mut rot = Mat::<f64>::zeros(r, r);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        rot = r_new;
        let z = &v * rot.transpose();
        for j in 0..r {
            let mut norm = 0.0;
            for i in 0..p {
                let x = z[(i, j)];
                let t = x.signum() * (x.abs() - mu).max(0.0);
                s[(i, j)] = t;
                norm += t * t;
            }
            if norm > 0.0 {
                let inv = norm.sqrt().recip();
                for i in 0..p {
                    s[(i, j)] *= inv;
                }
            }
        }
        r_new = polar(&(s.transpose() * &v))?;
        let change = (&r_new - &rot).norm_l2();
        if change <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("SEBA stopped after {iterations} iterations without settling");
    }

    let mut columns = from_mat(&s);
    for col in &mut columns {
        let pivot = col.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if pivot != 0.0 {
            let sign = pivot.signum();
            let max = col.iter().map(|x| sign * x).fold(f64::NEG_INFINITY, f64::max);
            col.iter_mut().for_each(|x| *x = sign * *x / max);
        }
    }
    let min_of = |c: &Vec<f64>| c.iter().copied().fold(f64::INFINITY, f64::min);
    columns.sort_by(|a, b| min_of(b).total_cmp(&min_of(a)));
    let maxima = columns
        .iter()
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let minima = columns.iter().map(min_of).collect();

    Ok(SebaBasis {
        columns,
        maxima,
        minima,
        iterations,
        converged,
        rotation: (0..r).map(|i| (0..r).map(|j| rot[(i, j)]).collect()).collect(),
        mu,
    })
}

/// Largest principal angle, in radians, between two column spans.
pub fn max_principal_angle(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let qa = orthonormalise(&to_mat(a))?;
    let qb = orthonormalise(&to_mat(b))?;
    let svd = (qa.transpose() * &qb)
        .svd()
        .map_err(|e| Error::Numerical(format!("SVD of subspace overlap failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let smallest = (0..s.nrows()).map(|i| s[i]).fold(f64::INFINITY, f64::min);
    Ok(smallest.clamp(-1.0, 1.0).acos())
}

/// Per-fibre support of one sparse spacetime vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub index: usize,
    /// Boxes with value above the cutoff, one list per time fibre.
    pub supports: Vec<Vec<usize>>,
    pub areas: Vec<f64>,
    /// First fibre with nonempty support.
    pub birth: Option<usize>,
    /// Last fibre with nonempty support.
    pub death: Option<usize>,
    /// Area of the symmetric difference between consecutive fibre supports.
    pub changes: Vec<f64>,
}

/// Splits each spacetime column into `n_t` fibres over boxes with the given
/// measures and keeps the entries strictly above `cutoff`.
pub fn extract_families(columns: &[Vec<f64>], measures: &[f64], n_t: usize, cutoff: f64) -> Result<Vec<Family>> {
    if !(0.0..1.0).contains(&cutoff) {
        return Err(Error::domain(format!("cutoff must lie in [0, 1) (got {cutoff})")));
    }
    let n = measures.len();
    columns
        .iter()
        .enumerate()
        .map(|(index, col)| {
            if col.len() != n * n_t {
                return Err(Error::domain(format!(
                    "column {index} has length {}, expected {n_t} fibres of {n} boxes",
                    col.len()
                )));
            }
            let supports: Vec<Vec<usize>> = col
                .chunks(n)
                .map(|fibre| (0..n).filter(|&i| fibre[i] > cutoff).collect())
                .collect();
            let areas: Vec<f64> = supports
                .iter()
                .map(|s| s.iter().map(|&i| measures[i]).sum())
                .collect();
            let changes = supports
                .windows(2)
                .map(|w| {
                    let (a, b) = (&w[0], &w[1]);
                    let only_a = a.iter().filter(|i| b.binary_search(i).is_err());
                    let only_b = b.iter().filter(|i| a.binary_search(i).is_err());
                    only_a.chain(only_b).fold(0.0, |acc, &i| acc + measures[i])
                })
                .collect();
            Ok(Family {
                index,
                birth: supports.iter().position(|s| !s.is_empty()),
                death: supports.iter().rposition(|s| !s.is_empty()),
                supports,
                areas,
                changes,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn four_point() -> Vec<Vec<f64>> {
        vec![vec![0.5, 0.5, 0.5, 0.5], vec![0.5, 0.5, -0.5, -0.5]]
    }

    fn rotate(v: &[Vec<f64>], theta: f64) -> Vec<Vec<f64>> {
        let (c, s) = (theta.cos(), theta.sin());
        vec![
            v[0].iter().zip(&v[1]).map(|(a, b)| c * a + s * b).collect(),
            v[0].iter().zip(&v[1]).map(|(a, b)| -s * a + c * b).collect(),
        ]
    }

    /// Brute-force oracle: the rotation angle minimising the summed 1-norms,
    /// with columns sign-fixed and scaled to unit maximum.
    fn sparsest_rotation(v: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let l1 = |cols: &[Vec<f64>]| cols.iter().flatten().map(|x| x.abs()).sum::<f64>();
        let best = (0..36000)
            .map(|i| (i as f64 / 100.0).to_radians())
            .min_by(|a, b| l1(&rotate(v, *a)).total_cmp(&l1(&rotate(v, *b))))
            .unwrap();
        rotate(v, best)
            .into_iter()
            .map(|c| {
                let pivot = c.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
                c.iter().map(|x| x / pivot).collect()
            })
            .collect()
    }

    fn same_up_to_order(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
        a.iter().all(|ca| {
            b.iter()
                .any(|cb| ca.iter().zip(cb).all(|(x, y)| (x - y).abs() <= tol))
        })
    }

    #[test]
    fn four_point_indicators() {
        let basis = seba(&four_point(), &SebaOptions::default()).unwrap();
        assert!(basis.converged);
        let oracle = sparsest_rotation(&four_point());
        assert!(same_up_to_order(&basis.columns, &oracle, 1e-6), "{:?} vs {oracle:?}", basis.columns);
        for c in &basis.columns {
            let on: Vec<bool> = c.iter().map(|x| *x > 0.5).collect();
            assert!(on == [true, true, false, false] || on == [false, false, true, true]);
            for x in c {
                assert!(*x > 1.0 - 1e-12 || x.abs() <= 1e-6);
            }
        }
        assert_eq!(basis.maxima, vec![1.0, 1.0]);
    }

    #[test]
    fn sparse_indicator_basis_is_a_fixed_point() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = vec![vec![s, s, 0.0, 0.0], vec![0.0, 0.0, s, s]];
        let opts = SebaOptions {
            init: SebaInit::Identity,
            ..SebaOptions::default()
        };
        let basis = seba(&v, &opts).unwrap();
        assert_eq!(basis.iterations, 1);
        assert_eq!(basis.rotation, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(same_up_to_order(&basis.columns, &[vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]], 1e-12));
    }

    #[test]
    fn single_constant_vector() {
        let v = vec![vec![0.5; 4]];
        let basis = seba(&v, &SebaOptions::default()).unwrap();
        assert_eq!(basis.columns, vec![vec![1.0; 4]]);
    }

    #[test]
    fn rejects_dependent_vectors_and_bad_mu() {
        let v = vec![vec![1.0, 0.0, 1.0], vec![2.0, 0.0, 2.0]];
        assert!(matches!(seba(&v, &SebaOptions::default()), Err(Error::Domain(_))));
        let opts = SebaOptions {
            mu: Some(1.5),
            ..SebaOptions::default()
        };
        assert!(seba(&four_point(), &opts).is_err());
    }

    #[test]
    fn span_is_preserved() {
        let basis = seba(&four_point(), &SebaOptions::default()).unwrap();
        let angle = max_principal_angle(&basis.columns, &four_point()).unwrap();
        assert!(angle.to_degrees() <= 10.0);
    }

    proptest! {
        #[test]
        fn rotation_invariance(theta in 0.0f64..std::f64::consts::TAU) {
            let base = seba(&four_point(), &SebaOptions::default()).unwrap();
            let rotated = seba(&rotate(&four_point(), theta), &SebaOptions::default()).unwrap();
            prop_assert!(same_up_to_order(&base.columns, &rotated.columns, 1e-6));
        }
    }

    #[test]
    fn families_report_supports_and_lifetimes() {
        let measures = [1.0, 2.0, 3.0];
        let col = vec![0.0, 0.05, 0.0, 0.9, 0.2, 0.0, 1.0, 0.0, 0.5];
        let fam = &extract_families(&[col, vec![0.0; 9]], &measures, 3, 0.1).unwrap();
        assert_eq!(fam[0].supports, vec![vec![], vec![0, 1], vec![0, 2]]);
        assert_eq!(fam[0].areas, vec![0.0, 3.0, 4.0]);
        assert_eq!(fam[0].birth, Some(1));
        assert_eq!(fam[0].death, Some(2));
        assert_eq!(fam[0].changes, vec![3.0, 5.0]);
        assert_eq!(fam[1].birth, None);
        assert_eq!(fam[1].death, None);
        assert!(extract_families(&[vec![0.0; 9]], &measures, 3, 1.0).is_err());
    }
}
