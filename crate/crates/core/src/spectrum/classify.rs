//! Temporal / spatial classification of spacetime eigenvectors.
//!
//! A spacetime vector of length `n_t·N` is viewed fibre by fibre. After
//! scaling to unit sup-norm, a vector that is numerically constant over all of
//! spacetime is trivial, one that is constant on every fibre is temporal, and
//! the rest are spatial (complex when the eigenvalue is).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EigenSolution, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenClass {
    Trivial,
    Temporal,
    SpatialReal,
    SpatialComplex,
}

impl EigenClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EigenClass::Trivial => "trivial",
            EigenClass::Temporal => "temporal",
            EigenClass::SpatialReal => "spatial-real",
            EigenClass::SpatialComplex => "spatial-complex",
        }
    }

    pub fn is_spatial(self) -> bool {
        matches!(self, EigenClass::SpatialReal | EigenClass::SpatialComplex)
    }
}

impl fmt::Display for EigenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EigenClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "trivial" => EigenClass::Trivial,
            "temporal" => EigenClass::Temporal,
            "spatial-real" => EigenClass::SpatialReal,
            "spatial-complex" => EigenClass::SpatialComplex,
            other => return Err(Error::config(format!("unknown eigenvector class `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyOptions {
    /// Standard-deviation threshold relative to the sup-norm.
    pub threshold: f64,
    /// Eigenvalues with `|im| > imag_tol·|λ|` are complex.
    pub imag_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            threshold: 0.05,
            imag_tol: 1e-8,
        }
    }
}

/// Measure-weighted spread of a sup-normalised spacetime vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FibreStatistics {
    /// Standard deviation over all of spacetime.
    pub global_std: f64,
    /// Largest within-fibre standard deviation.
    pub max_fibre_std: f64,
    /// Variance across fibres of the fibre means `Σ m_i x_i / Σ m_i`.
    pub integral_variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: EigenClass,
    #[serde(flatten)]
    pub stats: FibreStatistics,
}

fn weighted_mean_std(x: &[C64], weights: &[f64]) -> (C64, f64) {
    let total: f64 = weights.iter().sum();
    let mean = x.iter().zip(weights).map(|(x, w)| x * w).sum::<C64>() / total;
    let var = x
        .iter()
        .zip(weights)
        .map(|(x, w)| w * (x - mean).norm_sqr())
        .sum::<f64>()
        / total;
    (mean, var.sqrt())
}

pub fn fibre_statistics(vector: &[C64], n: usize, n_t: usize, measures: &[f64]) -> Result<FibreStatistics> {
    if vector.len() != n * n_t || measures.len() != n {
        return Err(Error::domain(format!(
            "vector of length {} does not match {n_t} fibres of {n} boxes ({} measures)",
            vector.len(),
            measures.len()
        )));
    }
    let sup = vector.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let scale = if sup > 0.0 { 1.0 / sup } else { 1.0 };
    let x: Vec<C64> = vector.iter().map(|z| z * scale).collect();

    let weights: Vec<f64> = measures.iter().copied().cycle().take(n * n_t).collect();
    let (_, global_std) = weighted_mean_std(&x, &weights);
    let mut max_fibre_std = 0.0f64;
    let mut means = Vec::with_capacity(n_t);
    for fibre in x.chunks(n) {
        let (mean, std) = weighted_mean_std(fibre, measures);
        max_fibre_std = max_fibre_std.max(std);
        means.push(mean);
    }
    let avg = means.iter().sum::<C64>() / n_t as f64;
    let integral_variance = means.iter().map(|m| (m - avg).norm_sqr()).sum::<f64>() / n_t as f64;
    Ok(FibreStatistics {
        global_std,
        max_fibre_std,
        integral_variance,
    })
}

/// Classifies a single eigenpair.
pub fn classify_vector(
    value: C64,
    vector: &[C64],
    n: usize,
    n_t: usize,
    measures: &[f64],
    opts: &ClassifyOptions,
) -> Result<Classification> {
    let stats = fibre_statistics(vector, n, n_t, measures)?;
    let class = if stats.global_std < opts.threshold {
        EigenClass::Trivial
    } else if stats.max_fibre_std < opts.threshold {
        EigenClass::Temporal
    } else if value.im.abs() > opts.imag_tol * value.norm() {
        EigenClass::SpatialComplex
    } else {
        EigenClass::SpatialReal
    };
    Ok(Classification { class, stats })
}

pub fn classify(
    solution: &EigenSolution,
    n: usize,
    n_t: usize,
    measures: &[f64],
    opts: &ClassifyOptions,
) -> Result<Vec<Classification>> {
    solution
        .values
        .iter()
        .zip(&solution.vectors)
        .map(|(&v, x)| classify_vector(v, x, n, n_t, measures, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inflated::{discrete_temporal_eigenvalue, temporal_mode};

    fn real(v: impl IntoIterator<Item = f64>) -> Vec<C64> {
        v.into_iter().map(|x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn constant_is_trivial_and_cosine_in_time_is_temporal() {
        let (n, n_t) = (6, 5);
        let m = vec![1.0; n];
        let opts = ClassifyOptions::default();
        let c = classify_vector(C64::new(0.0, 0.0), &real(vec![1.0; n * n_t]), n, n_t, &m, &opts).unwrap();
        assert_eq!(c.class, EigenClass::Trivial);
        let t = n_t - 1;
        let v = real((0..n * n_t).map(|idx| (std::f64::consts::PI * (idx / n) as f64 / t as f64).cos()));
        let c = classify_vector(C64::new(-1.0, 0.0), &v, n, n_t, &m, &opts).unwrap();
        assert_eq!(c.class, EigenClass::Temporal);
        assert!(c.stats.integral_variance > 0.1);
    }

    #[test]
    fn spatial_vectors_split_by_eigenvalue() {
        let (n, n_t) = (4, 3);
        let m = vec![1.0; n];
        let v = real((0..n * n_t).map(|idx| if idx % n < 2 { 1.0 } else { -1.0 }));
        let opts = ClassifyOptions::default();
        let c = classify_vector(C64::new(-0.3, 0.0), &v, n, n_t, &m, &opts).unwrap();
        assert_eq!(c.class, EigenClass::SpatialReal);
        assert!(c.stats.integral_variance < 1e-30);
        let c = classify_vector(C64::new(-0.3, 0.2), &v, n, n_t, &m, &opts).unwrap();
        assert_eq!(c.class, EigenClass::SpatialComplex);
        // the test is relative, so rates in 1/s classify like model units
        let c = classify_vector(C64::new(-3e-7, 2e-9), &v, n, n_t, &m, &opts).unwrap();
        assert_eq!(c.class, EigenClass::SpatialComplex);
        let c = classify_vector(C64::new(-3e-7, 1e-16), &v, n, n_t, &m, &opts).unwrap();
        assert_eq!(c.class, EigenClass::SpatialReal);
    }

    #[test]
    fn kronecker_factors_classify_consistently() {
        // separable modes of the zero-velocity problem: time cosine ⊗ space cosine
        let (nx, ny, n_t) = (5, 3, 4);
        let n = nx * ny;
        let m = vec![1.0; n];
        let opts = ClassifyOptions::default();
        for k in 0..n_t {
            let ct = temporal_mode(n_t, k);
            for p in 0..nx {
                for q in 0..ny {
                    let (cx, cy) = (temporal_mode(nx, p), temporal_mode(ny, q));
                    let v = real((0..n * n_t).map(|idx| {
                        let (l, b) = (idx / n, idx % n);
                        ct[l] * cx[b % nx] * cy[b / nx]
                    }));
                    let lambda = discrete_temporal_eigenvalue(1.0, 1.0, n_t, k);
                    let c = classify_vector(C64::new(lambda, 0.0), &v, n, n_t, &m, &opts).unwrap();
                    let expected = match (k, p + q) {
                        (0, 0) => EigenClass::Trivial,
                        (_, 0) => EigenClass::Temporal,
                        _ => EigenClass::SpatialReal,
                    };
                    assert_eq!(c.class, expected, "k={k} p={p} q={q}");
                }
            }
        }
    }

    #[test]
    fn class_names_round_trip() {
        for c in [
            EigenClass::Trivial,
            EigenClass::Temporal,
            EigenClass::SpatialReal,
            EigenClass::SpatialComplex,
        ] {
            assert_eq!(c.as_str().parse::<EigenClass>().unwrap(), c);
        }
    }
}
