//! Gaussian inhomogeneous averaging over Rabi rate and detuning, and the
//! polarimetry signal built on the averaged population.

mod average;
mod quadrature;
mod signal;

pub use average::{
    average_population, average_sequence_population, closed_form_evaluator, Averaged,
    ClosedFormAverager, Method,
};
pub use quadrature::GaussHermite;
pub use signal::{synthesize_signal, SignalModel};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Default Gauss-Hermite order per axis.
pub const DEFAULT_QUAD_ORDER: usize = 21;

/// Largest probability mass that may be discarded at `chi <= 0`.
pub const MAX_TRUNCATED_WEIGHT: f64 = 1e-12;

/// Gaussian distribution of (chi, Delta), all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub chi0: f64,
    pub delta0: f64,
    pub dchi: f64,
    pub ddelta: f64,
    /// Correlation coefficient between chi and Delta.
    #[serde(default)]
    pub correlation: f64,
}

impl EnsembleSpec {
    pub fn new(chi0: f64, delta0: f64, dchi: f64, ddelta: f64) -> Result<Self> {
        let s = EnsembleSpec {
            chi0,
            delta0,
            dchi,
            ddelta,
            correlation: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    /// Spreads given as fractions of `chi0`.
    pub fn from_relative(chi0: f64, delta0: f64, dchi_rel: f64, ddelta_rel: f64) -> Result<Self> {
        Self::new(chi0, delta0, dchi_rel * chi0, ddelta_rel * chi0)
    }

    /// Delta distribution at (chi0, delta0).
    pub fn sharp(chi0: f64, delta0: f64) -> Result<Self> {
        Self::new(chi0, delta0, 0.0, 0.0)
    }

    pub fn with_correlation(mut self, rho: f64) -> Result<Self> {
        self.correlation = rho;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(
            "ensemble spec",
            &[
                self.chi0,
                self.delta0,
                self.dchi,
                self.ddelta,
                self.correlation,
            ],
        )?;
        if self.chi0 <= 0.0 {
            return Err(Error::invalid(format!(
                "chi0 must be positive, got {}",
                self.chi0
            )));
        }
        if self.dchi < 0.0 || self.ddelta < 0.0 {
            return Err(Error::invalid("ensemble spreads must be nonnegative"));
        }
        if !(-1.0..=1.0).contains(&self.correlation) {
            return Err(Error::invalid("correlation must lie in [-1, 1]"));
        }
        Ok(())
    }

    pub fn dchi_rel(&self) -> f64 {
        self.dchi / self.chi0
    }

    pub fn ddelta_rel(&self) -> f64 {
        self.ddelta / self.chi0
    }

    pub fn is_sharp(&self) -> bool {
        self.dchi == 0.0 && self.ddelta == 0.0
    }

    /// Member drawn from standard-normal coordinates `(x, y)`.
    pub fn member_at(&self, x: f64, y: f64) -> (f64, f64) {
        let rho = self.correlation;
        let chi = self.chi0 + self.dchi * x;
        let delta = self.delta0 + self.ddelta * (rho * x + (1.0 - rho * rho).sqrt() * y);
        (chi, delta)
    }

    /// Tensor-product quadrature nodes with `chi > 0`, and the weight
    /// removed by dropping the others.
    pub fn nodes(&self, order: usize) -> Result<(Vec<Node>, f64)> {
        self.nodes_with(order, order)
    }

    /// Per-axis orders (Rabi rate, detuning). Callers must reject
    /// evaluating on a spec that drops more than `MAX_TRUNCATED_WEIGHT`.
    pub fn nodes_with(&self, order_chi: usize, order_delta: usize) -> Result<(Vec<Node>, f64)> {
        self.validate()?;
        if self.is_sharp() {
            return Ok((
                vec![Node {
                    chi: self.chi0,
                    delta: self.delta0,
                    weight: 1.0,
                }],
                0.0,
            ));
        }
        // Collapse axes without spread to a single node.
        let axis = |spread: f64, order: usize| -> Result<(Vec<f64>, Vec<f64>)> {
            if spread == 0.0 {
                Ok((vec![0.0], vec![1.0]))
            } else {
                let gh = GaussHermite::new(order)?;
                Ok((gh.nodes, gh.weights))
            }
        };
        let (xs, wx) = axis(self.dchi, order_chi)?;
        let (ys, wy) = axis(self.ddelta, order_delta)?;
        let mut nodes = Vec::with_capacity(xs.len() * ys.len());
        let mut lost = 0.0;
        for (&x, &a) in xs.iter().zip(&wx) {
            for (&y, &b) in ys.iter().zip(&wy) {
                let (chi, delta) = self.member_at(x, y);
                if chi > 0.0 {
                    nodes.push(Node {
                        chi,
                        delta,
                        weight: a * b,
                    });
                } else {
                    lost += a * b;
                }
            }
        }
        if lost > MAX_TRUNCATED_WEIGHT {
            return Err(Error::TruncatedWeight(lost));
        }
        Ok((nodes, lost))
    }
}

/// Per-axis Gauss-Hermite orders that keep the average of the closed-form
/// population converged to about 1e-7 up to time `t_max`.
///
/// Over time the detuning spread imprints a phase `ddelta^2 t / (2 chi0)`
/// that is quadratic in the node coordinate, and Gauss-Hermite needs a
/// number of nodes that grows with its square. Linear phases (`dchi t`, and
/// `delta0 ddelta t / chi0`) are cheaper. The result is never below
/// [`DEFAULT_QUAD_ORDER`] and is capped at [`MAX_QUAD_ORDER`].
pub fn recommended_orders(spec: &EnsembleSpec, t_max: f64) -> (usize, usize) {
    orders_with_floor(spec, t_max, DEFAULT_QUAD_ORDER)
}

pub(crate) fn orders_with_floor(spec: &EnsembleSpec, t_max: f64, floor: usize) -> (usize, usize) {
    orders_for(spec, t_max, floor, [6.0, 3.0, 0.5], [8.0, 25.0, 30.0])
}

/// Orders for about 1e-6 accuracy, enough inside fits to noisy data.
pub(crate) fn fit_orders(spec: &EnsembleSpec, t_max: f64, floor: usize) -> (usize, usize) {
    orders_for(spec, t_max, floor, [4.0, 2.5, 0.4], [5.0, 18.0, 22.0])
}

/// Node counts from quadratic fits (in the phase) to the orders Gauss-Hermite
/// needs for `cos(b x)` (`lin`) and `exp(i a x^2)` (`quad`).
fn orders_for(
    spec: &EnsembleSpec,
    t_max: f64,
    floor: usize,
    lin: [f64; 3],
    quad: [f64; 3],
) -> (usize, usize) {
    let t = t_max.abs();
    let poly = |c: [f64; 3], x: f64| c[0] + c[1] * x + c[2] * x * x;
    let clamp = |n: f64| (n.ceil() as usize).clamp(floor.min(MAX_QUAD_ORDER), MAX_QUAD_ORDER);
    let chi = poly(lin, spec.dchi * t);
    let a = spec.ddelta * spec.ddelta * t / (2.0 * spec.chi0);
    let b = spec.delta0.abs() * spec.ddelta * t / spec.chi0;
    let delta = poly(quad, a) + poly(lin, b) - lin[0];
    (clamp(chi), clamp(delta))
}

/// Largest order [`recommended_orders`] will ask for.
pub const MAX_QUAD_ORDER: usize = 400;

/// One quadrature node of the (chi, Delta) distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub chi: f64,
    pub delta: f64,
    pub weight: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(EnsembleSpec::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(EnsembleSpec::new(1.0, 0.0, -0.1, 0.0).is_err());
        assert!(EnsembleSpec::new(1.0, 0.0, 0.1, 0.1)
            .unwrap()
            .with_correlation(1.5)
            .is_err());
        let s = EnsembleSpec::from_relative(2.0, 0.0, 0.003, 0.073).unwrap();
        assert!((s.dchi_rel() - 0.003).abs() < 1e-15);
        assert!((s.ddelta_rel() - 0.073).abs() < 1e-15);
    }

    #[test]
    fn node_weights() {
        let s = EnsembleSpec::from_relative(1.0, 0.0, 0.003, 0.073).unwrap();
        let (nodes, lost) = s.nodes(21).unwrap();
        assert_eq!(nodes.len(), 441);
        assert_eq!(lost, 0.0);
        let total: f64 = nodes.iter().map(|n| n.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean_d2: f64 = nodes.iter().map(|n| n.weight * n.delta * n.delta).sum();
        assert!((mean_d2 - 0.073f64.powi(2)).abs() < 1e-14);
        let (one, _) = EnsembleSpec::sharp(1.0, 0.2).unwrap().nodes(21).unwrap();
        assert_eq!(one.len(), 1);
        let (row, _) = EnsembleSpec::new(1.0, 0.0, 0.0, 0.1)
            .unwrap()
            .nodes(21)
            .unwrap();
        assert_eq!(row.len(), 21);
    }

    #[test]
    fn wide_rabi_spread_is_rejected() {
        let s = EnsembleSpec::from_relative(1.0, 0.0, 0.5, 0.0).unwrap();
        assert!(matches!(s.nodes(21), Err(Error::TruncatedWeight(_))));
    }

    #[test]
    fn correlated_members() {
        let s = EnsembleSpec::new(1.0, 0.0, 0.1, 0.2)
            .unwrap()
            .with_correlation(1.0)
            .unwrap();
        let (chi, delta) = s.member_at(1.0, 5.0);
        assert!((chi - 1.1).abs() < 1e-15);
        assert!((delta - 0.2).abs() < 1e-15);
    }
}
