//! Adaptive Gauss–Legendre quadrature on intervals.

use serde::{Deserialize, Serialize};

/// Settings for the face-flux integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureOptions {
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of interval halvings.
    pub max_depth: usize,
}

impl QuadratureOptions {
    /// 1e-8 absolute and relative tolerance.
    pub fn tight() -> Self {
        QuadratureOptions {
            nodes: 3,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_depth: 30,
        }
    }

    /// 1e-2 absolute and relative tolerance, the coarse setting used in the
    /// original double-gyre and blocking experiments.
    pub fn coarse() -> Self {
        QuadratureOptions {
            abs_tol: 1e-2,
            rel_tol: 1e-2,
            ..Self::tight()
        }
    }
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self::tight()
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Reusable fixed-order rule with adaptive bisection.
#[derive(Debug, Clone)]
pub struct AdaptiveGauss {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    opts: QuadratureOptions,
}

impl AdaptiveGauss {
    pub fn new(opts: QuadratureOptions) -> Self {
        let (nodes, weights) = gauss_legendre(opts.nodes.max(1));
        AdaptiveGauss {
            nodes,
            weights,
            opts,
        }
    }

    fn panel<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integrates `f` over `[a, b]`. `None` when the refinement limit is hit.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Option<f64> {
        let whole = self.panel(&mut f, a, b);
        self.refine(&mut f, a, b, whole, b - a, 0)
    }

    fn refine<F: FnMut(f64) -> f64>(
        &self,
        f: &mut F,
        a: f64,
        b: f64,
        whole: f64,
        total: f64,
        depth: usize,
    ) -> Option<f64> {
        let mid = 0.5 * (a + b);
        let left = self.panel(f, a, mid);
        let right = self.panel(f, mid, b);
        let sum = left + right;
        let abs_tol = self.opts.abs_tol * (b - a) / total;
        if (sum - whole).abs() <= abs_tol.max(self.opts.rel_tol * sum.abs()) {
            return Some(sum);
        }
        if depth >= self.opts.max_depth {
            return None;
        }
        Some(
            self.refine(f, a, mid, left, total, depth + 1)?
                + self.refine(f, mid, b, right, total, depth + 1)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn three_point_rule() {
        let (x, w) = gauss_legendre(3);
        let r = (0.6f64).sqrt();
        assert_abs_diff_eq!(x[0], -r, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[0], 5.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 8.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert_abs_diff_eq!(q, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn adaptive_handles_a_kink() {
        let q = AdaptiveGauss::new(QuadratureOptions::tight());
        let v = q.integrate(|x| (x - 0.3f64).max(0.0), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, 0.5 * 0.7 * 0.7, epsilon = 1e-8);
    }

    #[test]
    fn refinement_limit_is_reported() {
        let q = AdaptiveGauss::new(QuadratureOptions {
            max_depth: 2,
            ..QuadratureOptions::tight()
        });
        assert!(q.integrate(|x| (1.0 / x).sin(), 1e-6, 1.0).is_none());
    }
}
