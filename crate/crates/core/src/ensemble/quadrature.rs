//! Gauss-Hermite rules for the standard normal weight.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights with `sum(w f(x)) ~ E[f(X)]`, `X ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub-Welsch: eigen-decomposition of the Jacobi matrix of the
    /// probabilists' Hermite recurrence (zero diagonal, off-diagonal `sqrt(k)`).
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("quadrature order must be >= 1"));
        }
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let b = (k as f64).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrize: the rule is exactly even.
        let n = pairs.len();
        for i in 0..n / 2 {
            let (x, w) = (
                0.5 * (pairs[n - 1 - i].0 - pairs[i].0),
                0.5 * (pairs[i].1 + pairs[n - 1 - i].1),
            );
            pairs[i] = (-x, w);
            pairs[n - 1 - i] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Ok(GaussHermite {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial(n: i64) -> f64 {
        if n <= 0 {
            1.0
        } else {
            n as f64 * double_factorial(n - 2)
        }
    }

    #[test]
    fn moments_are_exact() {
        for &order in &[1usize, 2, 5, 21, 41] {
            let gh = GaussHermite::new(order).unwrap();
            for k in 0..order.min(16) {
                let m = gh.expectation(|x| x.powi(2 * k as i32));
                let exact = double_factorial(2 * k as i64 - 1);
                assert!(
                    ((m - exact) / exact).abs() < 1e-9,
                    "order {order}, moment {}: {m} vs {exact}",
                    2 * k
                );
                assert!(gh.expectation(|x| x.powi(2 * k as i32 + 1)).abs() < 1e-9 * exact.max(1.0));
            }
        }
    }

    #[test]
    fn gaussian_characteristic_function() {
        let gh = GaussHermite::new(21).unwrap();
        let m = gh.expectation(|x| (1.5 * x).cos());
        assert!((m - (-1.125f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(GaussHermite::new(0).is_err());
    }
}
